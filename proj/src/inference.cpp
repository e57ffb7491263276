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

#include "inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "rng.hpp"

namespace memecap {

std::string to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kGreedy:
      return "greedy";
    case DecodeMode::kBeam:
      return "beam";
    case DecodeMode::kTemperatureBeam:
      return "temperature-beam";
  }
  return "unknown";
}

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "greedy") return DecodeMode::kGreedy;
  if (text == "beam") return DecodeMode::kBeam;
  if (text == "temperature-beam" || text == "temperature_beam") {
    return DecodeMode::kTemperatureBeam;
  }
  fail(ErrorCode::kValidation,
       "unknown decode mode '" + std::string(text) +
           "' (expected greedy|beam|temperature-beam)");
}

void DecodeConfig::validate() const {
  std::vector<std::string> problems;
  if (k < 1) problems.push_back("beam width k must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    problems.push_back("temperature must be > 0");
  }
  if (top_m < k) problems.push_back("top_m must be >= k");
  if (max_len < 1) problems.push_back("max_len must be >= 1");
  if (problems.empty()) return;
  std::string message = "invalid decode configuration:";
  for (const auto& p : problems) message += "\n  " + p;
  fail(ErrorCode::kValidation, message);
}

std::vector<double> apply_temperature_log(std::span<const double> log_p,
                                          double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(ErrorCode::kValidation, "temperature must be > 0");
  }
  double max = -std::numeric_limits<double>::infinity();
  for (double l : log_p) {
    if (l / temperature > max) max = l / temperature;
  }
  if (!std::isfinite(max)) {
    fail(ErrorCode::kValidation, "temperature of a distribution with no mass");
  }
  std::vector<double> out(log_p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    out[i] = std::exp(log_p[i] / temperature - max);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> apply_temperature(std::span<const double> p,
                                      double temperature) {
  double sum = 0.0;
  std::vector<double> log_p(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0)) {
      fail(ErrorCode::kValidation, "probabilities must be non-negative");
    }
    sum += p[i];
    log_p[i] = std::log(p[i]);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorCode::kValidation,
         "probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  return apply_temperature_log(log_p, temperature);
}

template <typename T>
std::vector<double> next_log_probs(const Model<T>& model,
                                   const EncoderOutput<T>& encoded,
                                   TokenId token, DecoderState<T>& state) {
  const Vector<T> log_p =
      log_softmax(decoder_step(model, encoded, token, state));
  return std::vector<double>(log_p.begin(), log_p.end());
}

template <typename T>
double sequence_log_prob(const Model<T>& model, const EncoderOutput<T>& encoded,
                         std::span<const TokenId> token_ids) {
  if (token_ids.empty() || token_ids.front() != kStartId) {
    fail(ErrorCode::kValidation, "sequence must start with START");
  }
  DecoderState<T> state = initial_decoder_state(model, encoded);
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < token_ids.size(); ++t) {
    total += next_log_probs(model, encoded, token_ids[t], state)[token_ids[t + 1]];
  }
  return total;
}

namespace {

TokenId argmax(const std::vector<double>& values) {
  // max_element returns the first maximum, i.e. the lowest id on ties.
  return static_cast<TokenId>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

// Token ids ordered by descending log-prob, ties by id; -inf entries dropped.
std::vector<TokenId> ranked_tokens(const std::vector<double>& log_p,
                                   std::size_t limit) {
  std::vector<TokenId> ids;
  ids.reserve(log_p.size());
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    if (std::isfinite(log_p[i])) ids.push_back(static_cast<TokenId>(i));
  }
  const std::size_t n = std::min(limit, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + n, ids.end(),
                    [&](TokenId a, TokenId b) {
                      if (log_p[a] != log_p[b]) return log_p[a] > log_p[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

// Draws `count` distinct tokens from the top_m pool reshaped by temperature.
std::vector<TokenId> sample_children(const std::vector<double>& log_p,
                                     std::size_t count,
                                     const DecodeConfig& config, Rng& rng) {
  std::vector<TokenId> pool = ranked_tokens(log_p, config.top_m);
  double max = -std::numeric_limits<double>::infinity();
  for (TokenId id : pool) max = std::max(max, log_p[id]);
  double norm = 0.0;
  for (TokenId id : pool) norm += std::exp(log_p[id] - max);
  const double log_norm = max + std::log(norm);

  std::vector<double> pool_log_p;
  pool_log_p.reserve(pool.size());
  for (TokenId id : pool) pool_log_p.push_back(log_p[id] - log_norm);

  std::vector<TokenId> chosen;
  while (chosen.size() < count && !pool.empty()) {
    // Tempered from log-probs after every removal; a single tempered vector
    // underflows to zero past the top token at low temperature.
    const std::vector<double> weights =
        apply_temperature_log(pool_log_p, config.temperature);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = pool.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cumulative += weights[i];
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    if (pick == pool.size()) {
      // Rounding left u above the final cumulative sum.
      pick = weights.size() - 1;
      while (pick > 0 && weights[pick] == 0.0) --pick;
    }
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    pool_log_p.erase(pool_log_p.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return chosen;
}

double ranking_key(double log_prob, std::size_t generated, bool normalize) {
  if (!normalize || generated == 0) return log_prob;
  return log_prob / static_cast<double>(generated);
}

template <typename T, typename ChooseChildren>
std::vector<ScoredCaption> run_beam(const Model<T>& model,
                                    const EncoderOutput<T>& encoded,
                                    const DecodeConfig& config,
                                    ChooseChildren choose) {
  config.validate();
  std::vector<Hypothesis<T>> live;
  live.push_back({{kStartId}, 0.0, initial_decoder_state(model, encoded), false});
  std::vector<Hypothesis<T>> completed;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
    double key;
  };

  for (std::size_t step = 0;
       step < config.max_len && !live.empty() && completed.size() < config.k;
       ++step) {
    const std::size_t width = config.k - completed.size();
    std::vector<Candidate> candidates;
    std::vector<DecoderState<T>> next_states;
    next_states.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      next_states.push_back(live[i].state);
      const std::vector<double> log_p = next_log_probs(
          model, encoded, live[i].token_ids.back(), next_states.back());
      for (TokenId token : choose(log_p, width)) {
        const double score = live[i].log_prob + log_p[token];
        candidates.push_back(
            {i, token, score,
             ranking_key(score, live[i].token_ids.size(), config.length_normalize)});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.key != b.key) return a.key > b.key;
                       if (a.parent != b.parent) return a.parent < b.parent;
                       return a.token < b.token;
                     });
    if (candidates.size() > width) candidates.resize(width);

    std::vector<Hypothesis<T>> next_live;
    for (const Candidate& c : candidates) {
      Hypothesis<T> child;
      child.token_ids = live[c.parent].token_ids;
      child.token_ids.push_back(c.token);
      child.log_prob = c.score;
      if (c.token == kEndId) {
        child.finished = true;
        completed.push_back(std::move(child));
      } else {
        child.state = next_states[c.parent];
        next_live.push_back(std::move(child));
      }
    }
    live = std::move(next_live);
  }

  std::vector<ScoredCaption> results;
  for (auto* pool : {&completed, &live}) {
    for (auto& h : *pool) results.push_back({std::move(h.token_ids), h.log_prob});
  }
  std::stable_sort(results.begin(), results.end(),
                   [&](const ScoredCaption& a, const ScoredCaption& b) {
                     const double ka = ranking_key(a.log_prob, a.token_ids.size() - 1,
                                                   config.length_normalize);
                     const double kb = ranking_key(b.log_prob, b.token_ids.size() - 1,
                                                   config.length_normalize);
                     if (ka != kb) return ka > kb;
                     return a.token_ids < b.token_ids;
                   });
  if (results.size() > config.k) results.resize(config.k);
  return results;
}

}  // namespace

template <typename T>
std::vector<TokenId> greedy_decode(const Model<T>& model,
                                   const EncoderOutput<T>& encoded,
                                   std::size_t max_len) {
  std::vector<TokenId> ids{kStartId};
  DecoderState<T> state = initial_decoder_state(model, encoded);
  for (std::size_t step = 0; step < max_len; ++step) {
    const TokenId next =
        argmax(next_log_probs(model, encoded, ids.back(), state));
    ids.push_back(next);
    if (next == kEndId) break;
  }
  return ids;
}

template <typename T>
std::vector<ScoredCaption> beam_search(const Model<T>& model,
                                       const EncoderOutput<T>& encoded,
                                       const DecodeConfig& config) {
  return run_beam(model, encoded, config,
                  [](const std::vector<double>& log_p, std::size_t width) {
                    return ranked_tokens(log_p, width);
                  });
}

template <typename T>
std::vector<ScoredCaption> temperature_beam_search(
    const Model<T>& model, const EncoderOutput<T>& encoded,
    const DecodeConfig& config) {
  Rng rng(config.seed);
  return run_beam(model, encoded, config,
                  [&](const std::vector<double>& log_p, std::size_t width) {
                    return sample_children(log_p, width, config, rng);
                  });
}

template <typename T>
std::vector<ScoredCaption> decode(const Model<T>& model,
                                  const EncoderOutput<T>& encoded,
                                  const DecodeConfig& config) {
  config.validate();
  switch (config.mode) {
    case DecodeMode::kGreedy: {
      std::vector<TokenId> ids = greedy_decode(model, encoded, config.max_len);
      const double score = sequence_log_prob(model, encoded, ids);
      return {{std::move(ids), score}};
    }
    case DecodeMode::kBeam:
      return beam_search(model, encoded, config);
    case DecodeMode::kTemperatureBeam:
      return temperature_beam_search(model, encoded, config);
  }
  return {};
}

std::string caption_text(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (id == kStartId || id == kEndId) continue;
    words.push_back(vocab.token(id));
  }
  return detokenize(words);
}

template <typename T>
GenerateResult generate(const Model<T>& model, const Vector<T>& image,
                        const std::optional<std::string>& label,
                        const DecodeConfig& config) {
  config.validate();
  GenerateResult result;
  std::vector<TokenId> label_ids;
  if (label && !label->empty()) {
    if (model.config.variant == EncoderVariant::kImageOnly) {
      result.warnings.push_back("label ignored: model uses the image-only encoder");
    } else {
      const auto tokens = tokenize(*label);
      label_ids = encode_label(tokens, model.vocab);
    }
  }
  const EncoderOutput<T> encoded = encode(model, image, label_ids);
  for (auto& scored : decode(model, encoded, config)) {
    result.captions.push_back({caption_text(scored.token_ids, model.vocab),
                               scored.log_prob, std::move(scored.token_ids)});
  }
  return result;
}

#define MEMECAP_INSTANTIATE_INFERENCE(T)                                       \
  template std::vector<double> next_log_probs(                                 \
      const Model<T>&, const EncoderOutput<T>&, TokenId, DecoderState<T>&);    \
  template double sequence_log_prob(const Model<T>&, const EncoderOutput<T>&,  \
                                    std::span<const TokenId>);                 \
  template std::vector<TokenId> greedy_decode(const Model<T>&,                 \
                                              const EncoderOutput<T>&,         \
                                              std::size_t);                    \
  template std::vector<ScoredCaption> beam_search(                             \
      const Model<T>&, const EncoderOutput<T>&, const DecodeConfig&);          \
  template std::vector<ScoredCaption> temperature_beam_search(                 \
      const Model<T>&, const EncoderOutput<T>&, const DecodeConfig&);          \
  template std::vector<ScoredCaption> decode(                                  \
      const Model<T>&, const EncoderOutput<T>&, const DecodeConfig&);          \
  template GenerateResult generate(const Model<T>&, const Vector<T>&,          \
                                   const std::optional<std::string>&,          \
                                   const DecodeConfig&);

MEMECAP_INSTANTIATE_INFERENCE(float)
MEMECAP_INSTANTIATE_INFERENCE(double)

#undef MEMECAP_INSTANTIATE_INFERENCE

}  // namespace memecap
