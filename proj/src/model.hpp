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

// Encoder variants, the LSTM cell, Luong attention and the decoder forward
// pass. Forward functions optionally fill a cache consumed by the hand-written
// backward pass in training.hpp.
//
// The LSTM cell has no biases and no output nonlinearity:
//   i = sigmoid(W_ix x + W_im m')     f = sigmoid(W_fx x + W_fm m')
//   o = sigmoid(W_ox x + W_om m')     g = tanh(W_cx x + W_cm m')
//   c = f * c' + i * g                m = o * c

#ifndef MEMECAP_MODEL_HPP_
#define MEMECAP_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "embeddings.hpp"
#include "numerics.hpp"

namespace memecap {

enum class EncoderVariant : std::uint32_t {
  kImageOnly = 1,        // q = W_1 p + b_1
  kGloveAverage = 2,     // q = W_2 (p || mean(e)) + b_2
  kAttentionLabels = 3,  // encoder LSTM over (W_3 p + b_3, e_1..e_n), attended
};

std::string to_string(EncoderVariant variant);
EncoderVariant parse_variant(std::string_view text);

inline constexpr std::size_t kDefaultImageDim = 2048;
inline constexpr std::size_t kMaxLayers = 3;

struct ModelConfig {
  EncoderVariant variant = EncoderVariant::kGloveAverage;
  std::size_t layers = 1;
  std::size_t hidden = 300;
  std::size_t vocab_size = 0;
  std::size_t embed_dim = kGloveDim;
  std::size_t image_dim = kDefaultImageDim;

  // Throws kValidation listing every problem.
  void validate() const;
  // Variants 1 and 2 produce an embed_dim-sized q; it is projected when the
  // decoder is a different width.
  bool has_init_projection() const {
    return variant != EncoderVariant::kAttentionLabels && hidden != embed_dim;
  }
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct LstmWeights {
  Matrix<T> ix, im, fx, fm, ox, om, cx, cm;

  LstmWeights() = default;
  LstmWeights(std::size_t input_dim, std::size_t hidden)
      : ix(hidden, input_dim), im(hidden, hidden),
        fx(hidden, input_dim), fm(hidden, hidden),
        ox(hidden, input_dim), om(hidden, hidden),
        cx(hidden, input_dim), cm(hidden, hidden) {}

  std::size_t hidden() const { return im.rows(); }
  std::size_t input_dim() const { return ix.cols(); }
  bool empty() const { return im.empty(); }
};

template <typename T>
struct LstmState {
  Vector<T> c;
  Vector<T> m;

  static LstmState zeros(std::size_t hidden) {
    return {Vector<T>(hidden), Vector<T>(hidden)};
  }
};

// Every trainable tensor. Gradients reuse this type. Tensors a variant does
// not use are left empty.
template <typename T>
struct Parameters {
  Matrix<T> embedding;     // V x E
  Matrix<T> encoder_proj;  // W_1 | W_2 | W_3
  Vector<T> encoder_bias;  // b_1 | b_2 | b_3
  LstmWeights<T> encoder_lstm;
  Matrix<T> attn_score;    // W_a, H x H
  Matrix<T> attn_combine;  // W_c, H x 2H
  Matrix<T> init_proj;     // H x E, only when H != E for variants 1-2
  std::vector<LstmWeights<T>> decoder;
  Matrix<T> output;        // V x H

  // Non-empty tensors in declaration order. This order is the checkpoint
  // order and the optimizer/grad-check iteration order.
  std::vector<std::pair<std::string, std::span<T>>> tensors();
  std::vector<std::pair<std::string, std::span<const T>>> tensors() const;

  // Same shapes, all zero.
  Parameters zeros_like() const;
  std::size_t parameter_count() const;
};

template <typename T>
struct Model {
  using scalar_type = T;

  ModelConfig config;
  Parameters<T> params;
  Vocabulary vocab;
  bool embeddings_trainable = true;

  // Uniform [-kInitRange, kInitRange] weights drawn from `seed` in tensor
  // order. The embedding table comes from `embeddings` when given.
  static Model create(const ModelConfig& config, Vocabulary vocab,
                      std::uint64_t seed,
                      std::optional<EmbeddingMatrix<T>> embeddings = {});
};

template <typename T>
struct LstmStepCache {
  Vector<T> x, m_prev, c_prev;
  Vector<T> i, f, o, g;  // gate activations
  Vector<T> c, m;
};

template <typename T>
LstmState<T> lstm_step(const LstmWeights<T>& w, const Vector<T>& x,
                       const LstmState<T>& state,
                       LstmStepCache<T>* cache = nullptr);

template <typename T>
struct AttentionMemory {
  std::vector<Vector<T>> keys;  // encoder outputs, one per label token
};

template <typename T>
struct AttentionCache {
  Vector<T> h;
  std::vector<T> weights;
  Vector<T> context;
  Vector<T> combined;  // context || h
  Vector<T> output;
};

// Luong "general" scores s_k = h^T W_a k.
template <typename T>
std::vector<T> attention_weights(const Vector<T>& h,
                                 const AttentionMemory<T>& memory,
                                 const Matrix<T>& score);

// tanh(W_c (sum_k a_k k || h)).
template <typename T>
Vector<T> luong_attention(const Vector<T>& h, const AttentionMemory<T>& memory,
                          const Matrix<T>& score, const Matrix<T>& combine,
                          AttentionCache<T>* cache = nullptr);

template <typename T>
struct EncoderCache {
  Vector<T> image;
  Vector<T> proj_input;              // p, or p || mean(e) for variant 2
  std::vector<TokenId> label_ids;    // after empty-label substitution
  Vector<T> q;
  std::vector<LstmStepCache<T>> steps;  // variant 3 encoder LSTM
};

template <typename T>
struct EncoderOutput {
  Vector<T> q;
  AttentionMemory<T> memory;  // variant 3 only
  Vector<T> initial_m;        // decoder layer-1 m_0
};

template <typename T>
Vector<T> encode_v1(const Model<T>& model, const Vector<T>& image);
template <typename T>
Vector<T> encode_v2(const Model<T>& model, const Vector<T>& image,
                    std::span<const TokenId> label_ids);
template <typename T>
std::pair<Vector<T>, AttentionMemory<T>> encode_v3(
    const Model<T>& model, const Vector<T>& image,
    std::span<const TokenId> label_ids);

// Runs the model's own variant. Empty labels become a single UNK.
template <typename T>
EncoderOutput<T> encode(const Model<T>& model, const Vector<T>& image,
                        std::span<const TokenId> label_ids,
                        EncoderCache<T>* cache = nullptr);

template <typename T>
struct DecoderState {
  std::vector<LstmState<T>> layers;
};

template <typename T>
struct DecoderStepCache {
  TokenId input = 0;
  std::vector<LstmStepCache<T>> layers;
  AttentionCache<T> attention;
  Vector<T> top;  // vector fed to the output projection
};

template <typename T>
DecoderState<T> initial_decoder_state(const Model<T>& model,
                                      const EncoderOutput<T>& encoded);

// Consumes one token, advances `state` and returns V logits.
template <typename T>
Vector<T> decoder_step(const Model<T>& model, const EncoderOutput<T>& encoded,
                       TokenId token, DecoderState<T>& state,
                       DecoderStepCache<T>* cache = nullptr);

// Teacher-forced pass; one logit vector per input id.
template <typename T>
std::vector<Vector<T>> decoder_forward(
    const Model<T>& model, const EncoderOutput<T>& encoded,
    std::span<const TokenId> input_ids,
    std::vector<DecoderStepCache<T>>* caches = nullptr);

}  // namespace memecap

#endif  // MEMECAP_MODEL_HPP_
