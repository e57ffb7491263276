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

#include "training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "error.hpp"
#include "eval.hpp"

namespace memecap {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "momentum";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "momentum") return OptimizerKind::kMomentum;
  fail(ErrorCode::kValidation, "unknown optimizer '" + std::string(text) +
                                   "' (expected sgd|momentum)");
}

TrainConfig TrainConfig::defaults(OptimizerKind optimizer) {
  TrainConfig config;
  config.optimizer = optimizer;
  config.learning_rate = optimizer == OptimizerKind::kSgd ? 0.1 : 0.01;
  return config;
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    problems.push_back("learning rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    problems.push_back("momentum must be in [0, 1)");
  }
  if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) {
    problems.push_back("lr decay factor must be > 0");
  }
  if (lr_decay_every < 1) problems.push_back("lr decay interval must be >= 1 epoch");
  if (batch_size < 1) problems.push_back("batch size must be >= 1");
  if (epochs < 0) problems.push_back("epochs must be >= 0");
  if (!(clip_norm > 0.0)) problems.push_back("clip norm must be > 0");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (problems.empty()) return;
  std::string message = "invalid training configuration:";
  for (const auto& p : problems) message += "\n  " + p;
  fail(ErrorCode::kValidation, message);
}

double TrainConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(lr_decay_factor, epoch / lr_decay_every);
}

template <typename T>
T cross_entropy(const std::vector<Vector<T>>& logits,
                std::span<const TokenId> targets) {
  if (logits.size() != targets.size()) {
    fail(ErrorCode::kShape, "cross_entropy: " + std::to_string(logits.size()) +
                                " steps but " + std::to_string(targets.size()) +
                                " targets");
  }
  if (logits.empty()) fail(ErrorCode::kValidation, "cross_entropy: no steps");
  T total = T(0);
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if (targets[t] >= logits[t].size()) {
      fail(ErrorCode::kOutOfRange, "cross_entropy: target id " +
                                       std::to_string(targets[t]) +
                                       " outside " +
                                       std::to_string(logits[t].size()) +
                                       " logits");
    }
    total -= log_softmax(logits[t])[targets[t]];
  }
  return total / static_cast<T>(logits.size());
}

namespace {

void require_trainable_caption(const MemeExample& example) {
  if (example.caption_ids.size() < 2 || example.caption_ids.front() != kStartId) {
    fail(ErrorCode::kValidation, "caption for image '" + example.image_id +
                                     "' must start with START and contain a "
                                     "target");
  }
}

// Backward through one LSTM cell. `dc` carries d/dc_t in and d/dc_{t-1} out;
// dx and dm_prev are accumulated into.
template <typename T>
void lstm_step_backward(const LstmWeights<T>& w, const LstmStepCache<T>& s,
                        const Vector<T>& dm, Vector<T>& dc, LstmWeights<T>& g,
                        Vector<T>& dx, Vector<T>& dm_prev) {
  const std::size_t H = w.hidden();
  Vector<T> dai(H), daf(H), dao(H), dag(H);
  for (std::size_t k = 0; k < H; ++k) {
    const T dc_total = dc[k] + dm[k] * s.o[k];
    const T d_o = dm[k] * s.c[k];
    const T d_i = dc_total * s.g[k];
    const T d_f = dc_total * s.c_prev[k];
    const T d_g = dc_total * s.i[k];
    dai[k] = d_i * s.i[k] * (T(1) - s.i[k]);
    daf[k] = d_f * s.f[k] * (T(1) - s.f[k]);
    dao[k] = d_o * s.o[k] * (T(1) - s.o[k]);
    dag[k] = d_g * (T(1) - s.g[k] * s.g[k]);
    dc[k] = dc_total * s.f[k];
  }
  add_outer(g.ix, dai, s.x);
  add_outer(g.im, dai, s.m_prev);
  add_outer(g.fx, daf, s.x);
  add_outer(g.fm, daf, s.m_prev);
  add_outer(g.ox, dao, s.x);
  add_outer(g.om, dao, s.m_prev);
  add_outer(g.cx, dag, s.x);
  add_outer(g.cm, dag, s.m_prev);

  add_matvec_transposed(w.ix, dai, dx);
  add_matvec_transposed(w.fx, daf, dx);
  add_matvec_transposed(w.ox, dao, dx);
  add_matvec_transposed(w.cx, dag, dx);
  add_matvec_transposed(w.im, dai, dm_prev);
  add_matvec_transposed(w.fm, daf, dm_prev);
  add_matvec_transposed(w.om, dao, dm_prev);
  add_matvec_transposed(w.cm, dag, dm_prev);
}

// Returns d/dh and accumulates key gradients into dkeys.
template <typename T>
Vector<T> attention_backward(const Parameters<T>& p,
                             const AttentionMemory<T>& memory,
                             const AttentionCache<T>& cache,
                             const Vector<T>& dout, Parameters<T>& grads,
                             std::vector<Vector<T>>& dkeys) {
  const std::size_t H = cache.h.size();
  Vector<T> dz(dout.size());
  for (std::size_t k = 0; k < dz.size(); ++k) {
    dz[k] = dout[k] * (T(1) - cache.output[k] * cache.output[k]);
  }
  add_outer(grads.attn_combine, dz, cache.combined);
  const Vector<T> dcombined = matvec_transposed(p.attn_combine, dz);
  const Vector<T> dcontext = slice(dcombined, 0, H);
  Vector<T> dh = slice(dcombined, H, H);

  const std::size_t n = memory.keys.size();
  std::vector<T> dweights(n);
  T weighted = T(0);
  for (std::size_t k = 0; k < n; ++k) {
    dweights[k] = dot(dcontext, memory.keys[k]);
    weighted += cache.weights[k] * dweights[k];
    axpy(cache.weights[k], dcontext.span(), dkeys[k].span());
  }
  const Vector<T> projected_h = matvec_transposed(p.attn_score, cache.h);
  for (std::size_t k = 0; k < n; ++k) {
    const T dscore = cache.weights[k] * (dweights[k] - weighted);
    if (dscore == T(0)) continue;
    const Vector<T> projected_key = matvec(p.attn_score, memory.keys[k]);
    axpy(dscore, projected_key.span(), dh.span());
    Vector<T> scaled_h = cache.h;
    for (T& x : scaled_h) x *= dscore;
    add_outer(grads.attn_score, scaled_h, memory.keys[k]);
    axpy(dscore, projected_h.span(), dkeys[k].span());
  }
  return dh;
}

template <typename T>
void add_to_row(Matrix<T>& m, TokenId row, const Vector<T>& v, T scale) {
  axpy(scale, v.span(), m.row(row));
}

template <typename T>
void encoder_backward(const Model<T>& model, const EncoderCache<T>& cache,
                      const Vector<T>& d_initial,
                      std::vector<Vector<T>>& dkeys, Parameters<T>& grads) {
  const Parameters<T>& p = model.params;
  const bool trainable = model.embeddings_trainable;
  Vector<T> dq;
  if (model.config.has_init_projection()) {
    add_outer(grads.init_proj, d_initial, cache.q);
    dq = matvec_transposed(p.init_proj, d_initial);
  } else {
    dq = d_initial;
  }

  switch (model.config.variant) {
    case EncoderVariant::kImageOnly:
      add_outer(grads.encoder_proj, dq, cache.proj_input);
      axpy(T(1), dq.span(), grads.encoder_bias.span());
      break;
    case EncoderVariant::kGloveAverage: {
      add_outer(grads.encoder_proj, dq, cache.proj_input);
      axpy(T(1), dq.span(), grads.encoder_bias.span());
      if (!trainable) break;
      const Vector<T> dinput = matvec_transposed(p.encoder_proj, dq);
      const Vector<T> dmean =
          slice(dinput, model.config.image_dim, model.config.embed_dim);
      const T share = T(1) / static_cast<T>(cache.label_ids.size());
      for (TokenId id : cache.label_ids) {
        add_to_row(grads.embedding, id, dmean, share);
      }
      break;
    }
    case EncoderVariant::kAttentionLabels: {
      const std::size_t H = model.config.hidden;
      const std::size_t E = model.config.embed_dim;
      Vector<T> dm = dq;
      Vector<T> dc(H);
      for (std::size_t j = cache.steps.size(); j-- > 0;) {
        if (j >= 1) axpy(T(1), dkeys[j - 1].span(), dm.span());
        Vector<T> dx(E), dm_prev(H);
        lstm_step_backward(p.encoder_lstm, cache.steps[j], dm, dc,
                           grads.encoder_lstm, dx, dm_prev);
        dm = std::move(dm_prev);
        if (j == 0) {
          add_outer(grads.encoder_proj, dx, cache.image);
          axpy(T(1), dx.span(), grads.encoder_bias.span());
        } else if (trainable) {
          add_to_row(grads.embedding, cache.label_ids[j - 1], dx, T(1));
        }
      }
      break;
    }
  }
}

}  // namespace

template <typename T>
T example_loss(const Model<T>& model, const Vector<T>& image,
               const MemeExample& example) {
  require_trainable_caption(example);
  const auto encoded = encode(model, image, example.label_ids);
  const std::span<const TokenId> ids(example.caption_ids);
  const auto logits = decoder_forward(model, encoded, ids.first(ids.size() - 1));
  return cross_entropy(logits, ids.subspan(1));
}

template <typename T>
T backward(const Model<T>& model, const Vector<T>& image,
           const MemeExample& example, Parameters<T>& grads, T scale) {
  require_trainable_caption(example);
  const Parameters<T>& p = model.params;
  const std::size_t H = model.config.hidden;
  const std::size_t L = model.config.layers;
  const bool attention =
      model.config.variant == EncoderVariant::kAttentionLabels;

  EncoderCache<T> enc_cache;
  const EncoderOutput<T> encoded =
      encode(model, image, example.label_ids, &enc_cache);
  const std::span<const TokenId> ids(example.caption_ids);
  const auto inputs = ids.first(ids.size() - 1);
  const auto targets = ids.subspan(1);
  std::vector<DecoderStepCache<T>> steps;
  const auto logits = decoder_forward(model, encoded, inputs, &steps);
  const T loss = cross_entropy(logits, targets);

  std::vector<Vector<T>> dm(L, Vector<T>(H));
  std::vector<Vector<T>> dc(L, Vector<T>(H));
  std::vector<Vector<T>> dkeys(encoded.memory.keys.size(), Vector<T>(H));
  const T step_scale = scale / static_cast<T>(inputs.size());

  for (std::size_t t = inputs.size(); t-- > 0;) {
    const DecoderStepCache<T>& step = steps[t];
    Vector<T> dlogits = softmax(logits[t]);
    dlogits[targets[t]] -= T(1);
    for (T& x : dlogits) x *= step_scale;

    add_outer(grads.output, dlogits, step.top);
    const Vector<T> dtop = matvec_transposed(p.output, dlogits);
    const Vector<T> dh =
        attention ? attention_backward(p, encoded.memory, step.attention, dtop,
                                       grads, dkeys)
                  : dtop;
    axpy(T(1), dh.span(), dm[L - 1].span());

    for (std::size_t l = L; l-- > 0;) {
      Vector<T> dx(p.decoder[l].input_dim());
      Vector<T> dm_prev(H);
      lstm_step_backward(p.decoder[l], step.layers[l], dm[l], dc[l],
                         grads.decoder[l], dx, dm_prev);
      dm[l] = std::move(dm_prev);
      if (l > 0) {
        axpy(T(1), dx.span(), dm[l - 1].span());
      } else if (model.embeddings_trainable) {
        add_to_row(grads.embedding, step.input, dx, T(1));
      }
    }
  }
  // dm[0] now holds d/d(m_0) of the first decoder layer.
  encoder_backward(model, enc_cache, dm[0], dkeys, grads);
  return loss;
}

template <typename T>
double clip_global_norm(Parameters<T>& grads, double clip_norm) {
  double squared = 0.0;
  for (const auto& [name, values] : std::as_const(grads).tensors()) {
    for (T x : values) squared += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(squared);
  if (norm > clip_norm) {
    const T factor = static_cast<T>(clip_norm / norm);
    for (auto& [name, values] : grads.tensors()) {
      for (T& x : values) x *= factor;
    }
  }
  return norm;
}

template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grads, T lr) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::kShape, "sgd_step: " + std::to_string(params.size()) +
                                " parameters but " +
                                std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

template <typename T>
void momentum_step(std::span<T> params, std::span<const T> grads,
                   std::span<T> velocity, T lr, T mu) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    fail(ErrorCode::kShape, "momentum_step: parameter, gradient and velocity "
                            "lengths differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

template <typename T>
void apply_update(Model<T>& model, const Parameters<T>& grads,
                  Parameters<T>& velocity, const TrainConfig& config, T lr) {
  auto params = model.params.tensors();
  const auto g = grads.tensors();
  auto v = velocity.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first == "embedding" && !model.embeddings_trainable) continue;
    if (config.optimizer == OptimizerKind::kSgd) {
      sgd_step(params[i].second, g[i].second, lr);
    } else {
      momentum_step(params[i].second, g[i].second, v[i].second, lr,
                    static_cast<T>(config.momentum));
    }
  }
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

std::vector<Vector<double>> example_logits(const Model<double>& model,
                                           const Vector<double>& image,
                                           const MemeExample& example) {
  const auto encoded = encode(model, image, example.label_ids);
  const std::span<const TokenId> ids(example.caption_ids);
  return decoder_forward(model, encoded, ids.first(ids.size() - 1));
}

// L(plus) - L(minus) computed from logit differences. Subtracting two
// separately rounded losses loses everything below ulp(L), which swamps
// gradients smaller than about 1e-6; the logits are much smaller than L so
// their differences keep those digits.
double loss_difference(const std::vector<Vector<double>>& plus,
                       const std::vector<Vector<double>>& minus,
                       std::span<const TokenId> targets) {
  double total = 0.0;
  for (std::size_t t = 0; t < plus.size(); ++t) {
    const Vector<double> p_minus = softmax(minus[t]);
    double ratio = 0.0;  // sum_i p_i (exp(delta_i) - 1)
    for (std::size_t i = 0; i < p_minus.size(); ++i) {
      ratio += p_minus[i] * std::expm1(plus[t][i] - minus[t][i]);
    }
    const TokenId y = targets[t];
    total += std::log1p(ratio) - (plus[t][y] - minus[t][y]);
  }
  return total / static_cast<double>(plus.size());
}

}  // namespace

GradCheckResult grad_check_against(Model<double> model,
                                   const Vector<double>& image,
                                   const MemeExample& example,
                                   const Parameters<double>& analytic,
                                   double epsilon, std::size_t max_entries,
                                   std::uint64_t seed) {
  const double base = example_loss(model, image, example);
  if (!std::isfinite(base)) fail(ErrorCode::kNumeric, "grad_check: non-finite loss");

  auto params = model.params.tensors();
  const auto grads = analytic.tensors();
  if (params.size() != grads.size()) {
    fail(ErrorCode::kShape, "grad_check: gradient layout does not match model");
  }
  struct Entry {
    std::size_t tensor;
    std::size_t index;
  };
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].first == "embedding" && !model.embeddings_trainable) continue;
    for (std::size_t i = 0; i < params[t].second.size(); ++i) {
      entries.push_back({t, i});
    }
  }
  if (max_entries > 0 && entries.size() > max_entries) {
    Rng rng(seed);
    rng.shuffle(std::span<Entry>(entries));
    entries.resize(max_entries);
  }

  GradCheckResult result;
  for (const Entry& e : entries) {
    double& w = params[e.tensor].second[e.index];
    const double saved = w;
    w = saved + epsilon;
    const auto plus = example_logits(model, image, example);
    w = saved - epsilon;
    const auto minus = example_logits(model, image, example);
    w = saved;
    const double delta = loss_difference(
        plus, minus, std::span<const TokenId>(example.caption_ids).subspan(1));
    if (!std::isfinite(delta)) {
      fail(ErrorCode::kNumeric, "grad_check: non-finite loss at " +
                                    params[e.tensor].first);
    }
    const double numeric = delta / (2.0 * epsilon);
    const double err =
        relative_error(grads[e.tensor].second[e.index], numeric);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_tensor = params[e.tensor].first;
      result.worst_index = e.index;
      result.worst_analytic = grads[e.tensor].second[e.index];
      result.worst_numeric = numeric;
    }
    ++result.checked;
  }
  return result;
}

GradCheckResult grad_check(const Model<double>& model,
                           const Vector<double>& image,
                           const MemeExample& example, double epsilon,
                           std::size_t max_entries, std::uint64_t seed) {
  Parameters<double> grads = model.params.zeros_like();
  backward(model, image, example, grads);
  return grad_check_against(model, image, example, grads, epsilon, max_entries,
                            seed);
}

std::string format_metrics_line(const EpochMetrics& metrics) {
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "%d\t%.6f\t%.6f", metrics.epoch,
                metrics.train_loss, metrics.eval_perplexity);
  return buffer;
}

namespace {

template <typename T>
void add_into(Parameters<T>& acc, const Parameters<T>& g) {
  auto a = acc.tensors();
  const auto b = g.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].second.size(); ++j) {
      a[i].second[j] += b[i].second[j];
    }
  }
}

template <typename T>
void zero(Parameters<T>& p) {
  for (auto& [name, values] : p.tensors()) {
    std::fill(values.begin(), values.end(), T(0));
  }
}

}  // namespace

template <typename T>
std::vector<EpochMetrics> train(
    Model<T>& model, const std::vector<MemeExample>& examples,
    const ImageTable<T>& images, const TrainConfig& config,
    const std::vector<MemeExample>& eval,
    const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (examples.empty()) fail(ErrorCode::kValidation, "training set is empty");
  for (const auto& example : examples) {
    image_for(images, example.image_id);
    require_trainable_caption(example);
  }
  if (config.freeze_embeddings) model.embeddings_trainable = false;
  const std::vector<MemeExample>& eval_set = eval.empty() ? examples : eval;

  Parameters<T> grads = model.params.zeros_like();
  Parameters<T> velocity = model.params.zeros_like();
  const std::size_t workers = config.threads;
  std::vector<Parameters<T>> buffers(workers, grads);
  std::vector<T> losses(workers);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  std::vector<EpochMetrics> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const T lr = static_cast<T>(config.learning_rate_at(epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;

    for (std::size_t start = 0, batch = 0; start < order.size();
         start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const T scale = T(1) / static_cast<T>(end - start);
      zero(grads);
      double batch_loss = 0.0;

      // Per-example gradients land in separate buffers and are summed in
      // example order, so the result does not depend on the thread count.
      for (std::size_t chunk = start; chunk < end; chunk += workers) {
        const std::size_t n = std::min(workers, end - chunk);
        auto work = [&](std::size_t w) {
          zero(buffers[w]);
          const MemeExample& example = examples[order[chunk + w]];
          losses[w] = backward(model, image_for(images, example.image_id),
                               example, buffers[w], scale);
        };
        if (n == 1) {
          work(0);
        } else {
          std::vector<std::jthread> pool;
          for (std::size_t w = 0; w < n; ++w) pool.emplace_back(work, w);
        }
        for (std::size_t w = 0; w < n; ++w) {
          add_into(grads, buffers[w]);
          batch_loss += static_cast<double>(losses[w]);
        }
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorCode::kNumeric, "non-finite loss in epoch " +
                                      std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(batch + 1));
      }
      clip_global_norm(grads, config.clip_norm);
      apply_update(model, grads, velocity, config, lr);
      loss_sum += batch_loss;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch + 1;
    metrics.train_loss = loss_sum / static_cast<double>(examples.size());
    metrics.eval_perplexity = perplexity(model, eval_set, images).perplexity;
    metrics.learning_rate = static_cast<double>(lr);
    history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  return history;
}

#define MEMECAP_INSTANTIATE_TRAINING(T)                                        \
  template T cross_entropy(const std::vector<Vector<T>>&,                      \
                           std::span<const TokenId>);                          \
  template T example_loss(const Model<T>&, const Vector<T>&,                   \
                          const MemeExample&);                                 \
  template T backward(const Model<T>&, const Vector<T>&, const MemeExample&,   \
                      Parameters<T>&, T);                                      \
  template double clip_global_norm(Parameters<T>&, double);                    \
  template void sgd_step(std::span<T>, std::span<const T>, T);                 \
  template void momentum_step(std::span<T>, std::span<const T>, std::span<T>,  \
                              T, T);                                           \
  template void apply_update(Model<T>&, const Parameters<T>&, Parameters<T>&,  \
                             const TrainConfig&, T);                           \
  template std::vector<EpochMetrics> train(                                    \
      Model<T>&, const std::vector<MemeExample>&, const ImageTable<T>&,        \
      const TrainConfig&, const std::vector<MemeExample>&,                     \
      const std::function<void(const EpochMetrics&)>&);

MEMECAP_INSTANTIATE_TRAINING(float)
MEMECAP_INSTANTIATE_TRAINING(double)

#undef MEMECAP_INSTANTIATE_TRAINING

}  // namespace memecap
