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

#include "embeddings.hpp"

#include <charconv>
#include <fstream>
#include <vector>

#include "error.hpp"
#include "io_util.hpp"

namespace memecap {

template <typename T>
EmbeddingMatrix<T> random_embeddings(std::size_t vocab_size, std::size_t dim,
                                     std::uint64_t seed) {
  if (dim == 0) fail(ErrorCode::kValidation, "embedding dimension must be > 0");
  EmbeddingMatrix<T> emb;
  emb.table = Matrix<T>(vocab_size, dim);
  Rng rng(seed);
  fill_uniform(emb.table.span(), rng, kInitRange);
  return emb;
}

template <typename T>
EmbeddingMatrix<T> load_glove(const std::filesystem::path& path,
                              const Vocabulary& vocab, std::uint64_t seed,
                              std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());

  EmbeddingMatrix<T> emb = random_embeddings<T>(vocab.size(), dim, seed);
  std::vector<bool> found(vocab.size(), false);
  std::size_t found_count = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ' ');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != dim + 1) {
      fail(ErrorCode::kFormat, where + ": expected " + std::to_string(dim) +
                                   " values, found " +
                                   std::to_string(fields.size() - 1));
    }
    const auto id = vocab.find(fields[0]);
    if (!id || *id < kNumSpecialTokens || found[*id]) continue;

    auto row = emb.table.row(*id);
    for (std::size_t j = 0; j < dim; ++j) {
      const std::string_view text = fields[j + 1];
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() ||
          !std::isfinite(value)) {
        fail(ErrorCode::kFormat, where + ": cannot parse value " +
                                     std::to_string(j + 1) + " '" +
                                     std::string(text) + "'");
      }
      row[j] = static_cast<T>(value);
    }
    found[*id] = true;
    ++found_count;
  }
  if (in.bad()) fail(ErrorCode::kIo, "error reading " + path.string());

  const std::size_t regular = vocab.size() - kNumSpecialTokens;
  emb.coverage = regular == 0 ? 0.0
                              : static_cast<double>(found_count) /
                                    static_cast<double>(regular);
  return emb;
}

template EmbeddingMatrix<float> random_embeddings<float>(std::size_t,
                                                         std::size_t,
                                                         std::uint64_t);
template EmbeddingMatrix<double> random_embeddings<double>(std::size_t,
                                                           std::size_t,
                                                           std::uint64_t);
template EmbeddingMatrix<float> load_glove<float>(const std::filesystem::path&,
                                                  const Vocabulary&,
                                                  std::uint64_t, std::size_t);
template EmbeddingMatrix<double> load_glove<double>(
    const std::filesystem::path&, const Vocabulary&, std::uint64_t,
    std::size_t);

}  // namespace memecap
