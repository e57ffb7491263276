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

#include "eval.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace memecap {

template <typename T>
double mean_nll(const Model<T>& model, const Vector<T>& image,
                const MemeExample& example) {
  const std::span<const TokenId> ids(example.caption_ids);
  if (ids.size() < 2 || ids.front() != kStartId) {
    fail(ErrorCode::kValidation, "eval caption for image '" + example.image_id +
                                     "' has nothing to predict");
  }
  const auto encoded = encode(model, image, example.label_ids);
  const auto logits = decoder_forward(model, encoded, ids.first(ids.size() - 1));
  double total = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    total -= static_cast<double>(log_softmax(logits[t])[ids[t + 1]]);
  }
  return total / static_cast<double>(logits.size());
}

EvalReport perplexity_from_nll(std::span<const double> mean_nlls) {
  if (mean_nlls.empty()) fail(ErrorCode::kValidation, "empty evaluation set");
  EvalReport report;
  double sum = 0.0;
  for (double nll : mean_nlls) {
    report.per_example_pp.push_back(std::exp(nll));
    sum += nll;
  }
  report.perplexity = std::exp(sum / static_cast<double>(mean_nlls.size()));
  return report;
}

template <typename T>
EvalReport perplexity(const Model<T>& model,
                      const std::vector<MemeExample>& examples,
                      const ImageTable<T>& images) {
  if (examples.empty()) fail(ErrorCode::kValidation, "empty evaluation set");
  std::vector<double> nlls;
  nlls.reserve(examples.size());
  for (const auto& example : examples) {
    nlls.push_back(
        mean_nll(model, image_for(images, example.image_id), example));
  }
  return perplexity_from_nll(nlls);
}

BigramProfile bigram_profile(std::span<const std::string> tokens) {
  BigramProfile profile;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    ++profile[{tokens[i - 1], tokens[i]}];
  }
  return profile;
}

double bigram_jaccard(const BigramProfile& a, const BigramProfile& b) {
  long shared = 0;
  long total = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      total += ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      total += ib->second;
      ++ib;
    } else {
      shared += std::min(ia->second, ib->second);
      total += std::max(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return total == 0 ? 0.0
                    : static_cast<double>(shared) / static_cast<double>(total);
}

DupIndex DupIndex::build(const std::vector<std::vector<std::string>>& captions) {
  DupIndex index;
  for (const auto& tokens : captions) {
    index.exact_.insert(detokenize(tokens));
    const std::size_t id = index.profiles_.size();
    index.profiles_.push_back(bigram_profile(tokens));
    for (const auto& [bigram, count] : index.profiles_.back()) {
      index.postings_[bigram].push_back(id);
    }
  }
  return index;
}

DupIndex DupIndex::build_from_text(const std::vector<std::string>& captions) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(captions.size());
  for (const auto& caption : captions) tokenized.push_back(tokenize(caption));
  return build(tokenized);
}

bool DupIndex::contains(std::span<const std::string> tokens) const {
  return exact_.count(detokenize(tokens)) != 0;
}

double DupIndex::max_similarity(std::span<const std::string> tokens) const {
  const BigramProfile query = bigram_profile(tokens);
  std::vector<std::size_t> candidates;
  for (const auto& [bigram, count] : query) {
    const auto it = postings_.find(bigram);
    if (it == postings_.end()) continue;
    candidates.insert(candidates.end(), it->second.begin(), it->second.end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best = 0.0;
  for (std::size_t id : candidates) {
    best = std::max(best, bigram_jaccard(query, profiles_[id]));
  }
  return best;
}

CopyResult copy_check(std::span<const std::string> tokens,
                      const DupIndex& index, double threshold) {
  if (index.contains(tokens)) return {CopyKind::kExact, 1.0};
  const double similarity = index.max_similarity(tokens);
  return {similarity >= threshold ? CopyKind::kNear : CopyKind::kOriginal,
          similarity};
}

CopyResult copy_check(std::string_view caption, const DupIndex& index,
                      double threshold) {
  const auto tokens = tokenize(caption);
  return copy_check(std::span<const std::string>(tokens), index, threshold);
}

double percent_in_data(const std::vector<std::string>& captions,
                       const DupIndex& index, double threshold) {
  if (captions.empty()) {
    fail(ErrorCode::kValidation, "percent_in_data of an empty caption set");
  }
  std::size_t hits = 0;
  for (const auto& caption : captions) {
    if (copy_check(caption, index, threshold).kind != CopyKind::kOriginal) {
      ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(captions.size());
}

template double mean_nll(const Model<float>&, const Vector<float>&,
                         const MemeExample&);
template double mean_nll(const Model<double>&, const Vector<double>&,
                         const MemeExample&);
template EvalReport perplexity(const Model<float>&,
                               const std::vector<MemeExample>&,
                               const ImageTable<float>&);
template EvalReport perplexity(const Model<double>&,
                               const std::vector<MemeExample>&,
                               const ImageTable<double>&);

}  // namespace memecap
