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

// Caption decoding: greedy, standard beam search and temperature-sampled beam
// search.
//
// Beam bookkeeping is shared by both beam modes. At every step each live
// hypothesis proposes `width` children, where width = k minus the number of
// completed captions. Candidates are ranked globally by summed log-prob (ties:
// parent order, then token id) and the top `width` survive; those ending in
// END retire to the completed pool. The search stops when k captions are
// complete, nothing is live, or max_len tokens have been generated; live
// hypotheses then fill the result as truncated captions.

#ifndef MEMECAP_INFERENCE_HPP_
#define MEMECAP_INFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"

namespace memecap {

enum class DecodeMode { kGreedy, kBeam, kTemperatureBeam };

std::string to_string(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view text);

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kTemperatureBeam;
  std::size_t k = 3;
  double temperature = 1.0;
  std::size_t top_m = 100;
  std::size_t max_len = 20;  // generated tokens, END included
  std::uint64_t seed = 1;
  bool length_normalize = false;

  void validate() const;
};

template <typename T>
struct Hypothesis {
  std::vector<TokenId> token_ids;  // starts with START
  double log_prob = 0.0;
  DecoderState<T> state;
  bool finished = false;
};

struct ScoredCaption {
  std::vector<TokenId> token_ids;  // START ... [END]
  double log_prob = 0.0;
};

// f(p)_i = p_i^(1/T) / sum_j p_j^(1/T), evaluated in log space.
std::vector<double> apply_temperature(std::span<const double> p,
                                      double temperature);

// Same map on log-probabilities; -inf entries stay at zero probability.
std::vector<double> apply_temperature_log(std::span<const double> log_p,
                                          double temperature);

// Next-token log-probabilities after consuming `token`; advances `state`.
template <typename T>
std::vector<double> next_log_probs(const Model<T>& model,
                                   const EncoderOutput<T>& encoded,
                                   TokenId token, DecoderState<T>& state);

// Sum of per-step log-probabilities of token_ids[1..] under the model.
template <typename T>
double sequence_log_prob(const Model<T>& model, const EncoderOutput<T>& encoded,
                         std::span<const TokenId> token_ids);

template <typename T>
std::vector<TokenId> greedy_decode(const Model<T>& model,
                                   const EncoderOutput<T>& encoded,
                                   std::size_t max_len);

template <typename T>
std::vector<ScoredCaption> beam_search(const Model<T>& model,
                                       const EncoderOutput<T>& encoded,
                                       const DecodeConfig& config);

// Children are drawn without replacement from the renormalized top_m
// distribution reshaped by apply_temperature; pruning still uses the true
// log-probabilities. Deterministic for a given seed.
template <typename T>
std::vector<ScoredCaption> temperature_beam_search(
    const Model<T>& model, const EncoderOutput<T>& encoded,
    const DecodeConfig& config);

// Dispatches on config.mode. Greedy yields one caption.
template <typename T>
std::vector<ScoredCaption> decode(const Model<T>& model,
                                  const EncoderOutput<T>& encoded,
                                  const DecodeConfig& config);

struct GeneratedCaption {
  std::string text;  // detokenized, START/END stripped
  double log_prob = 0.0;
  std::vector<TokenId> token_ids;
};

struct GenerateResult {
  std::vector<GeneratedCaption> captions;
  std::vector<std::string> warnings;
};

// Encodes (image, label) with the model's variant and decodes.
template <typename T>
GenerateResult generate(const Model<T>& model, const Vector<T>& image,
                        const std::optional<std::string>& label,
                        const DecodeConfig& config);

// Space-joined surface forms without START/END.
std::string caption_text(std::span<const TokenId> ids, const Vocabulary& vocab);

}  // namespace memecap

#endif  // MEMECAP_INFERENCE_HPP_
