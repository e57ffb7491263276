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

#ifndef MEMECAP_EMBEDDINGS_HPP_
#define MEMECAP_EMBEDDINGS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>

#include "corpus.hpp"
#include "numerics.hpp"

namespace memecap {

inline constexpr std::size_t kGloveDim = 300;
// Range of the uniform initializer shared by special tokens, tokens missing
// from the pretrained file and every model weight.
inline constexpr double kInitRange = 0.08;

template <typename T>
struct EmbeddingMatrix {
  Matrix<T> table;  // vocab size x dim
  bool trainable = true;
  double coverage = 0.0;  // found / non-special vocab size

  std::size_t dim() const { return table.cols(); }
};

// Every row is first drawn from the seeded initializer in id order; rows for
// non-special tokens present in the file are then overwritten with the file
// vector. Lines are `word v1 ... v<dim>`, single-space separated.
template <typename T>
EmbeddingMatrix<T> load_glove(const std::filesystem::path& path,
                              const Vocabulary& vocab, std::uint64_t seed,
                              std::size_t dim = kGloveDim);

// Seeded random table for runs without a pretrained file.
template <typename T>
EmbeddingMatrix<T> random_embeddings(std::size_t vocab_size, std::size_t dim,
                                     std::uint64_t seed);

template <typename T>
Vector<T> lookup(const Matrix<T>& table, TokenId id) {
  if (id >= table.rows()) {
    fail(ErrorCode::kOutOfRange, "embedding lookup: id " + std::to_string(id) +
                                     " outside table of " +
                                     std::to_string(table.rows()) + " rows");
  }
  const auto row = table.row(id);
  return Vector<T>(std::vector<T>(row.begin(), row.end()));
}

template <typename T>
Vector<T> lookup(const EmbeddingMatrix<T>& emb, TokenId id) {
  return lookup(emb.table, id);
}

template <typename T>
Vector<T> average_embeddings(const Matrix<T>& table,
                             std::span<const TokenId> ids) {
  if (ids.empty()) fail(ErrorCode::kValidation, "average of zero embeddings");
  Vector<T> mean(table.cols());
  for (TokenId id : ids) {
    const Vector<T> row = lookup(table, id);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += row[j];
  }
  const T scale = T(1) / static_cast<T>(ids.size());
  for (T& x : mean) x *= scale;
  return mean;
}

template <typename T>
Vector<T> average_embeddings(const EmbeddingMatrix<T>& emb,
                             std::span<const TokenId> ids) {
  return average_embeddings(emb.table, ids);
}

}  // namespace memecap

#endif  // MEMECAP_EMBEDDINGS_HPP_
