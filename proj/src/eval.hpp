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

// Perplexity and the training-set copy detector.

#ifndef MEMECAP_EVAL_HPP_
#define MEMECAP_EVAL_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "image_store.hpp"
#include "model.hpp"

namespace memecap {

inline constexpr double kDefaultNearDupThreshold = 0.8;

struct EvalReport {
  double perplexity = 0.0;
  std::vector<double> per_example_pp;
  double percent_in_data = 0.0;
  double near_dup_threshold = kDefaultNearDupThreshold;
};

// Mean negative log-probability of caption_ids[1..] under teacher forcing.
// END is predicted, START is not.
template <typename T>
double mean_nll(const Model<T>& model, const Vector<T>& image,
                const MemeExample& example);

// exp(mean over examples of mean_nll). Per-example values are exp(mean_nll).
template <typename T>
EvalReport perplexity(const Model<T>& model,
                      const std::vector<MemeExample>& examples,
                      const ImageTable<T>& images);

// Aggregation used by perplexity(), exposed for callers that already have
// per-caption mean NLLs.
EvalReport perplexity_from_nll(std::span<const double> mean_nlls);

using Bigram = std::pair<std::string, std::string>;
using BigramProfile = std::map<Bigram, int>;

BigramProfile bigram_profile(std::span<const std::string> tokens);

// Multiset Jaccard |A n B| / |A u B|; 0 when both are empty.
double bigram_jaccard(const BigramProfile& a, const BigramProfile& b);

enum class CopyKind { kExact, kNear, kOriginal };

struct CopyResult {
  CopyKind kind = CopyKind::kOriginal;
  double similarity = 0.0;  // best bigram Jaccard; 1 for exact hits
};

class DupIndex {
 public:
  // Captions are token sequences without START/END.
  static DupIndex build(const std::vector<std::vector<std::string>>& captions);
  // Tokenizes (and so lowercases) each caption first.
  static DupIndex build_from_text(const std::vector<std::string>& captions);

  bool contains(std::span<const std::string> tokens) const;
  // Highest Jaccard against any indexed caption sharing a bigram.
  double max_similarity(std::span<const std::string> tokens) const;
  std::size_t size() const { return profiles_.size(); }

 private:
  std::set<std::string> exact_;  // space-joined token sequences
  std::vector<BigramProfile> profiles_;
  std::map<Bigram, std::vector<std::size_t>> postings_;
};

CopyResult copy_check(std::span<const std::string> tokens,
                      const DupIndex& index,
                      double threshold = kDefaultNearDupThreshold);
CopyResult copy_check(std::string_view caption, const DupIndex& index,
                      double threshold = kDefaultNearDupThreshold);

// 100 * (exact + near) / total. Throws for an empty set.
double percent_in_data(const std::vector<std::string>& captions,
                       const DupIndex& index,
                       double threshold = kDefaultNearDupThreshold);

}  // namespace memecap

#endif  // MEMECAP_EVAL_HPP_
