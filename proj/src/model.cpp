/* Copyright 2026 The memecap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "model.hpp"

#include <sstream>

#include "error.hpp"

namespace memecap {

std::string to_string(EncoderVariant variant) {
  switch (variant) {
    case EncoderVariant::kImageOnly:
      return "image";
    case EncoderVariant::kGloveAverage:
      return "glove-average";
    case EncoderVariant::kAttentionLabels:
      return "attention";
  }
  return "unknown";
}

EncoderVariant parse_variant(std::string_view text) {
  if (text == "1" || text == "image") return EncoderVariant::kImageOnly;
  if (text == "2" || text == "glove-average") {
    return EncoderVariant::kGloveAverage;
  }
  if (text == "3" || text == "attention") {
    return EncoderVariant::kAttentionLabels;
  }
  fail(ErrorCode::kValidation,
       "unknown encoder variant '" + std::string(text) +
           "' (expected image|glove-average|attention or 1|2|3)");
}

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  const auto v = static_cast<std::uint32_t>(variant);
  if (v < 1 || v > 3) problems.push_back("variant must be 1, 2 or 3");
  if (layers < 1 || layers > kMaxLayers) {
    problems.push_back("layers must be 1, 2 or 3, got " +
                       std::to_string(layers));
  }
  if (hidden == 0) problems.push_back("hidden size must be > 0");
  if (embed_dim == 0) problems.push_back("embedding dimension must be > 0");
  if (image_dim == 0) problems.push_back("image dimension must be > 0");
  if (vocab_size < kNumSpecialTokens) {
    problems.push_back("vocabulary must contain the special tokens");
  }
  if (problems.empty()) return;
  std::string message = "invalid model configuration:";
  for (const auto& p : problems) message += "\n  " + p;
  fail(ErrorCode::kValidation, message);
}

namespace {

template <typename T, typename Span, typename Params>
std::vector<std::pair<std::string, Span>> collect_tensors(Params& p) {
  std::vector<std::pair<std::string, Span>> out;
  auto add = [&](std::string name, auto& tensor) {
    if (!tensor.empty()) out.emplace_back(std::move(name), tensor.span());
  };
  auto add_lstm = [&](const std::string& prefix, auto& w) {
    add(prefix + ".W_ix", w.ix);
    add(prefix + ".W_im", w.im);
    add(prefix + ".W_fx", w.fx);
    add(prefix + ".W_fm", w.fm);
    add(prefix + ".W_ox", w.ox);
    add(prefix + ".W_om", w.om);
    add(prefix + ".W_cx", w.cx);
    add(prefix + ".W_cm", w.cm);
  };
  add("embedding", p.embedding);
  add("encoder.proj", p.encoder_proj);
  add("encoder.bias", p.encoder_bias);
  add_lstm("encoder.lstm", p.encoder_lstm);
  add("attention.score", p.attn_score);
  add("attention.combine", p.attn_combine);
  add("decoder.init_proj", p.init_proj);
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    add_lstm("decoder.layer" + std::to_string(l + 1), p.decoder[l]);
  }
  add("output", p.output);
  return out;
}

template <typename T>
LstmWeights<T> zeros_like(const LstmWeights<T>& w) {
  if (w.empty()) return {};
  return LstmWeights<T>(w.input_dim(), w.hidden());
}

template <typename T>
Matrix<T> zeros_like(const Matrix<T>& m) {
  return Matrix<T>(m.rows(), m.cols());
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, std::span<T>>> Parameters<T>::tensors() {
  return collect_tensors<T, std::span<T>>(*this);
}

template <typename T>
std::vector<std::pair<std::string, std::span<const T>>>
Parameters<T>::tensors() const {
  return collect_tensors<T, std::span<const T>>(*this);
}

template <typename T>
Parameters<T> Parameters<T>::zeros_like() const {
  Parameters<T> out;
  out.embedding = memecap::zeros_like(embedding);
  out.encoder_proj = memecap::zeros_like(encoder_proj);
  out.encoder_bias = Vector<T>(encoder_bias.size());
  out.encoder_lstm = memecap::zeros_like(encoder_lstm);
  out.attn_score = memecap::zeros_like(attn_score);
  out.attn_combine = memecap::zeros_like(attn_combine);
  out.init_proj = memecap::zeros_like(init_proj);
  for (const auto& layer : decoder) {
    out.decoder.push_back(memecap::zeros_like(layer));
  }
  out.output = memecap::zeros_like(output);
  return out;
}

template <typename T>
std::size_t Parameters<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, values] : tensors()) n += values.size();
  return n;
}

template <typename T>
Model<T> Model<T>::create(const ModelConfig& config, Vocabulary vocab,
                          std::uint64_t seed,
                          std::optional<EmbeddingMatrix<T>> embeddings) {
  config.validate();
  if (config.vocab_size != vocab.size()) {
    fail(ErrorCode::kValidation,
         "model vocab_size " + std::to_string(config.vocab_size) +
             " does not match vocabulary of " + std::to_string(vocab.size()));
  }
  const std::size_t V = config.vocab_size;
  const std::size_t E = config.embed_dim;
  const std::size_t H = config.hidden;

  Model<T> model;
  model.config = config;
  model.vocab = std::move(vocab);
  Parameters<T>& p = model.params;

  p.embedding = Matrix<T>(V, E);
  switch (config.variant) {
    case EncoderVariant::kImageOnly:
      p.encoder_proj = Matrix<T>(E, config.image_dim);
      break;
    case EncoderVariant::kGloveAverage:
      p.encoder_proj = Matrix<T>(E, config.image_dim + E);
      break;
    case EncoderVariant::kAttentionLabels:
      p.encoder_proj = Matrix<T>(E, config.image_dim);
      p.encoder_lstm = LstmWeights<T>(E, H);
      p.attn_score = Matrix<T>(H, H);
      p.attn_combine = Matrix<T>(H, 2 * H);
      break;
  }
  p.encoder_bias = Vector<T>(E);
  if (config.has_init_projection()) p.init_proj = Matrix<T>(H, E);
  for (std::size_t l = 0; l < config.layers; ++l) {
    p.decoder.emplace_back(l == 0 ? E : H, H);
  }
  p.output = Matrix<T>(V, H);

  Rng rng(seed);
  for (auto& [name, values] : p.tensors()) fill_uniform(values, rng, kInitRange);

  if (embeddings) {
    if (embeddings->table.rows() != V || embeddings->table.cols() != E) {
      fail(ErrorCode::kShape, "embedding table " +
                                  embeddings->table.shape_string() +
                                  " does not match vocab " + std::to_string(V) +
                                  " x dim " + std::to_string(E));
    }
    p.embedding = std::move(embeddings->table);
    model.embeddings_trainable = embeddings->trainable;
  }
  return model;
}

template <typename T>
LstmState<T> lstm_step(const LstmWeights<T>& w, const Vector<T>& x,
                       const LstmState<T>& state, LstmStepCache<T>* cache) {
  const std::size_t H = w.hidden();
  if (x.size() != w.input_dim() || state.m.size() != H || state.c.size() != H) {
    fail(ErrorCode::kShape,
         "lstm_step: cell expects input " + std::to_string(w.input_dim()) +
             " and state " + std::to_string(H) + ", got input " +
             std::to_string(x.size()) + " and state " +
             std::to_string(state.m.size()) + "/" +
             std::to_string(state.c.size()));
  }
  const Vector<T> i = sigmoid(add(matvec(w.ix, x), matvec(w.im, state.m)));
  const Vector<T> f = sigmoid(add(matvec(w.fx, x), matvec(w.fm, state.m)));
  const Vector<T> o = sigmoid(add(matvec(w.ox, x), matvec(w.om, state.m)));
  const Vector<T> g = tanh(add(matvec(w.cx, x), matvec(w.cm, state.m)));

  LstmState<T> next;
  next.c = add(hadamard(f, state.c), hadamard(i, g));
  next.m = hadamard(o, next.c);
  if (cache != nullptr) {
    *cache = {x, state.m, state.c, i, f, o, g, next.c, next.m};
  }
  return next;
}

template <typename T>
std::vector<T> attention_weights(const Vector<T>& h,
                                 const AttentionMemory<T>& memory,
                                 const Matrix<T>& score) {
  if (memory.keys.empty()) fail(ErrorCode::kValidation, "attention over empty memory");
  // h^T W_a k == (W_a^T h) . k, so project h once.
  const Vector<T> projected = matvec_transposed(score, h);
  Vector<T> scores(memory.keys.size());
  for (std::size_t k = 0; k < memory.keys.size(); ++k) {
    scores[k] = dot(projected, memory.keys[k]);
  }
  return softmax(scores).values();
}

template <typename T>
Vector<T> luong_attention(const Vector<T>& h, const AttentionMemory<T>& memory,
                          const Matrix<T>& score, const Matrix<T>& combine,
                          AttentionCache<T>* cache) {
  std::vector<T> weights = attention_weights(h, memory, score);
  Vector<T> context(h.size());
  for (std::size_t k = 0; k < memory.keys.size(); ++k) {
    axpy(weights[k], memory.keys[k].span(), context.span());
  }
  Vector<T> combined = concat(context, h);
  Vector<T> output = tanh(matvec(combine, combined));
  if (cache != nullptr) {
    *cache = {h, std::move(weights), std::move(context), std::move(combined),
              output};
  }
  return output;
}

namespace {

void require_variant(EncoderVariant have, EncoderVariant want) {
  if (have != want) {
    fail(ErrorCode::kValidation, "encoder " + to_string(want) +
                                     " called on a " + to_string(have) +
                                     " model");
  }
}

template <typename T>
void require_image(const Model<T>& model, const Vector<T>& image) {
  if (image.size() != model.config.image_dim) {
    fail(ErrorCode::kShape, "image embedding has " +
                                std::to_string(image.size()) +
                                " values, model expects " +
                                std::to_string(model.config.image_dim));
  }
}

std::vector<TokenId> labels_or_unk(std::span<const TokenId> label_ids) {
  if (label_ids.empty()) return {kUnkId};
  return {label_ids.begin(), label_ids.end()};
}

template <typename T>
Vector<T> affine(const Matrix<T>& w, const Vector<T>& x, const Vector<T>& b) {
  return add(matvec(w, x), b);
}

}  // namespace

template <typename T>
Vector<T> encode_v1(const Model<T>& model, const Vector<T>& image) {
  require_variant(model.config.variant, EncoderVariant::kImageOnly);
  require_image(model, image);
  return affine(model.params.encoder_proj, image, model.params.encoder_bias);
}

template <typename T>
Vector<T> encode_v2(const Model<T>& model, const Vector<T>& image,
                    std::span<const TokenId> label_ids) {
  require_variant(model.config.variant, EncoderVariant::kGloveAverage);
  require_image(model, image);
  const std::vector<TokenId> ids = labels_or_unk(label_ids);
  const Vector<T> input =
      concat(image, average_embeddings(model.params.embedding,
                                       std::span<const TokenId>(ids)));
  return affine(model.params.encoder_proj, input, model.params.encoder_bias);
}

template <typename T>
std::pair<Vector<T>, AttentionMemory<T>> encode_v3(
    const Model<T>& model, const Vector<T>& image,
    std::span<const TokenId> label_ids) {
  require_variant(model.config.variant, EncoderVariant::kAttentionLabels);
  EncoderOutput<T> out = encode(model, image, label_ids);
  return {std::move(out.q), std::move(out.memory)};
}

template <typename T>
EncoderOutput<T> encode(const Model<T>& model, const Vector<T>& image,
                        std::span<const TokenId> label_ids,
                        EncoderCache<T>* cache) {
  require_image(model, image);
  const Parameters<T>& p = model.params;
  const std::vector<TokenId> labels = labels_or_unk(label_ids);
  EncoderOutput<T> out;
  Vector<T> proj_input;

  switch (model.config.variant) {
    case EncoderVariant::kImageOnly:
      proj_input = image;
      out.q = affine(p.encoder_proj, image, p.encoder_bias);
      break;
    case EncoderVariant::kGloveAverage:
      proj_input = concat(image, average_embeddings(
                                     p.embedding,
                                     std::span<const TokenId>(labels)));
      out.q = affine(p.encoder_proj, proj_input, p.encoder_bias);
      break;
    case EncoderVariant::kAttentionLabels: {
      proj_input = image;
      std::vector<LstmStepCache<T>>* steps =
          cache != nullptr ? &cache->steps : nullptr;
      if (steps != nullptr) steps->assign(labels.size() + 1, {});

      LstmState<T> state = LstmState<T>::zeros(model.config.hidden);
      const Vector<T> x0 = affine(p.encoder_proj, image, p.encoder_bias);
      state = lstm_step(p.encoder_lstm, x0, state,
                        steps != nullptr ? &(*steps)[0] : nullptr);
      for (std::size_t j = 0; j < labels.size(); ++j) {
        state = lstm_step(p.encoder_lstm, lookup(p.embedding, labels[j]), state,
                          steps != nullptr ? &(*steps)[j + 1] : nullptr);
        out.memory.keys.push_back(state.m);
      }
      out.q = state.m;
      break;
    }
  }

  out.initial_m = model.config.has_init_projection()
                      ? matvec(p.init_proj, out.q)
                      : out.q;
  if (cache != nullptr) {
    cache->image = image;
    cache->proj_input = std::move(proj_input);
    cache->label_ids = labels;
    cache->q = out.q;
  }
  return out;
}

template <typename T>
DecoderState<T> initial_decoder_state(const Model<T>& model,
                                      const EncoderOutput<T>& encoded) {
  const std::size_t H = model.config.hidden;
  if (encoded.initial_m.size() != H) {
    fail(ErrorCode::kShape, "initial state has " +
                                std::to_string(encoded.initial_m.size()) +
                                " values, decoder expects " + std::to_string(H));
  }
  DecoderState<T> state;
  state.layers.assign(model.config.layers, LstmState<T>::zeros(H));
  state.layers[0].m = encoded.initial_m;
  return state;
}

template <typename T>
Vector<T> decoder_step(const Model<T>& model, const EncoderOutput<T>& encoded,
                       TokenId token, DecoderState<T>& state,
                       DecoderStepCache<T>* cache) {
  const Parameters<T>& p = model.params;
  if (cache != nullptr) {
    cache->input = token;
    cache->layers.assign(p.decoder.size(), {});
  }
  Vector<T> x = lookup(p.embedding, token);
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    state.layers[l] = lstm_step(p.decoder[l], x, state.layers[l],
                                cache != nullptr ? &cache->layers[l] : nullptr);
    x = state.layers[l].m;
  }
  if (model.config.variant == EncoderVariant::kAttentionLabels) {
    x = luong_attention(x, encoded.memory, p.attn_score, p.attn_combine,
                        cache != nullptr ? &cache->attention : nullptr);
  }
  Vector<T> logits = matvec(p.output, x);
  if (cache != nullptr) cache->top = std::move(x);
  return logits;
}

template <typename T>
std::vector<Vector<T>> decoder_forward(
    const Model<T>& model, const EncoderOutput<T>& encoded,
    std::span<const TokenId> input_ids,
    std::vector<DecoderStepCache<T>>* caches) {
  if (input_ids.empty()) fail(ErrorCode::kValidation, "decoder_forward: empty input");
  if (input_ids.front() != kStartId) {
    fail(ErrorCode::kValidation, "decoder_forward: input must start with START");
  }
  DecoderState<T> state = initial_decoder_state(model, encoded);
  std::vector<Vector<T>> logits;
  logits.reserve(input_ids.size());
  if (caches != nullptr) caches->assign(input_ids.size(), {});
  for (std::size_t t = 0; t < input_ids.size(); ++t) {
    logits.push_back(decoder_step(model, encoded, input_ids[t], state,
                                  caches != nullptr ? &(*caches)[t] : nullptr));
  }
  return logits;
}

#define MEMECAP_INSTANTIATE_MODEL(T)                                         \
  template struct Parameters<T>;                                             \
  template struct Model<T>;                                                  \
  template LstmState<T> lstm_step(const LstmWeights<T>&, const Vector<T>&,   \
                                  const LstmState<T>&, LstmStepCache<T>*);   \
  template std::vector<T> attention_weights(                                 \
      const Vector<T>&, const AttentionMemory<T>&, const Matrix<T>&);        \
  template Vector<T> luong_attention(const Vector<T>&,                       \
                                     const AttentionMemory<T>&,              \
                                     const Matrix<T>&, const Matrix<T>&,     \
                                     AttentionCache<T>*);                    \
  template Vector<T> encode_v1(const Model<T>&, const Vector<T>&);           \
  template Vector<T> encode_v2(const Model<T>&, const Vector<T>&,            \
                               std::span<const TokenId>);                    \
  template std::pair<Vector<T>, AttentionMemory<T>> encode_v3(               \
      const Model<T>&, const Vector<T>&, std::span<const TokenId>);          \
  template EncoderOutput<T> encode(const Model<T>&, const Vector<T>&,        \
                                   std::span<const TokenId>,                 \
                                   EncoderCache<T>*);                        \
  template DecoderState<T> initial_decoder_state(const Model<T>&,            \
                                                 const EncoderOutput<T>&);   \
  template Vector<T> decoder_step(const Model<T>&, const EncoderOutput<T>&,  \
                                  TokenId, DecoderState<T>&,                 \
                                  DecoderStepCache<T>*);                     \
  template std::vector<Vector<T>> decoder_forward(                           \
      const Model<T>&, const EncoderOutput<T>&, std::span<const TokenId>,    \
      std::vector<DecoderStepCache<T>>*);

MEMECAP_INSTANTIATE_MODEL(float)
MEMECAP_INSTANTIATE_MODEL(double)

#undef MEMECAP_INSTANTIATE_MODEL

}  // namespace memecap
