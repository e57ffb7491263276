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

// Cross-entropy loss, backpropagation through time for every encoder variant,
// SGD / momentum updates, global-norm clipping and finite-difference gradient
// checking.

#ifndef MEMECAP_TRAINING_HPP_
#define MEMECAP_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "image_store.hpp"
#include "model.hpp"

namespace memecap {

enum class OptimizerKind { kSgd, kMomentum };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double momentum = 0.9;
  double learning_rate = 0.1;
  double lr_decay_factor = 0.5;
  int lr_decay_every = 5;  // epochs
  std::size_t batch_size = 16;
  int epochs = 10;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  bool freeze_embeddings = false;
  std::size_t threads = 1;

  // lr 0.1 for SGD, 0.01 for momentum with mu 0.9.
  static TrainConfig defaults(OptimizerKind optimizer);

  // Throws kValidation listing every problem at once.
  void validate() const;
  // learning_rate * lr_decay_factor ^ floor(epoch / lr_decay_every).
  double learning_rate_at(int epoch) const;
};

// Mean over steps of -log softmax(logits[t])[targets[t]].
template <typename T>
T cross_entropy(const std::vector<Vector<T>>& logits,
                std::span<const TokenId> targets);

// Forward pass only.
template <typename T>
T example_loss(const Model<T>& model, const Vector<T>& image,
               const MemeExample& example);

// Adds scale * d(loss)/d(params) into `grads` and returns the loss. Embedding
// rows receive gradient only when the model's embeddings are trainable.
template <typename T>
T backward(const Model<T>& model, const Vector<T>& image,
           const MemeExample& example, Parameters<T>& grads, T scale = T(1));

// Rescales grads so their global L2 norm is at most clip_norm. Returns the
// norm before clipping.
template <typename T>
double clip_global_norm(Parameters<T>& grads, double clip_norm);

template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grads, T lr);

// v <- mu v - lr g; theta <- theta + v
template <typename T>
void momentum_step(std::span<T> params, std::span<const T> grads,
                   std::span<T> velocity, T lr, T mu);

// Applies one optimizer step to every tensor; the embedding is skipped when
// the model's embeddings are frozen. `velocity` is unused for SGD.
template <typename T>
void apply_update(Model<T>& model, const Parameters<T>& grads,
                  Parameters<T>& velocity, const TrainConfig& config, T lr);

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares `analytic` with central differences (L(w+eps) - L(w-eps)) / 2eps.
// max_entries == 0 checks every entry; otherwise that many entries are
// sampled with `seed`. The embedding is skipped when frozen.
GradCheckResult grad_check_against(Model<double> model,
                                   const Vector<double>& image,
                                   const MemeExample& example,
                                   const Parameters<double>& analytic,
                                   double epsilon = 1e-5,
                                   std::size_t max_entries = 0,
                                   std::uint64_t seed = 0);

// grad_check_against with the gradients from backward().
GradCheckResult grad_check(const Model<double>& model,
                           const Vector<double>& image,
                           const MemeExample& example, double epsilon = 1e-5,
                           std::size_t max_entries = 0,
                           std::uint64_t seed = 0);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double eval_perplexity = 0.0;
  double learning_rate = 0.0;
};

// One line per epoch: `epoch \t train_loss \t eval_perplexity`.
std::string format_metrics_line(const EpochMetrics& metrics);

// Shuffles with Rng(config.seed) each epoch, averages per-example gradients
// over each batch in example order, clips, updates, and evaluates perplexity
// on `eval` (the training examples when empty). Throws kNumeric when a batch
// loss is not finite.
template <typename T>
std::vector<EpochMetrics> train(
    Model<T>& model, const std::vector<MemeExample>& examples,
    const ImageTable<T>& images, const TrainConfig& config,
    const std::vector<MemeExample>& eval = {},
    const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace memecap

#endif  // MEMECAP_TRAINING_HPP_
