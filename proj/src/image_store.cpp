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

#include "image_store.hpp"

#include <cmath>
#include <cstdint>

#include "error.hpp"
#include "io_util.hpp"

namespace memecap {

void ImageStore::put(const std::string& id, std::vector<float> values) {
  if (values.size() != kImageEmbeddingDim) {
    fail(ErrorCode::kShape, "image '" + id + "' has " +
                                std::to_string(values.size()) +
                                " values, expected " +
                                std::to_string(kImageEmbeddingDim));
  }
  if (!all_finite(std::span<const float>(values))) {
    fail(ErrorCode::kNumeric, "image '" + id + "' has non-finite values");
  }
  const auto it = index_.find(id);
  if (it != index_.end()) {
    values_[it->second] = std::move(values);
    return;
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  values_.push_back(std::move(values));
}

const std::vector<float>& ImageStore::at(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    fail(ErrorCode::kValidation, "unknown image id '" + id + "'");
  }
  return values_[it->second];
}

std::string ImageStore::serialize() const {
  ByteWriter out;
  out.bytes(kImageStoreMagic);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    out.str(ids_[i]);
    for (float v : values_[i]) out.f32(v);
  }
  return out.buffer();
}

ImageStore ImageStore::deserialize(std::string_view bytes,
                                   const std::string& source) {
  ByteReader in(bytes, source);
  if (in.bytes(kImageStoreMagic.size()) != kImageStoreMagic) {
    fail(ErrorCode::kFormat, source + ": not an image embedding file (bad magic)");
  }
  ImageStore store;
  while (!in.at_end()) {
    std::string id = in.str();
    if (store.contains(id)) {
      fail(ErrorCode::kFormat, source + ": duplicate image id '" + id + "'");
    }
    std::vector<float> values(kImageEmbeddingDim);
    for (float& v : values) v = in.f32();
    store.put(id, std::move(values));
  }
  return store;
}

void ImageStore::save(const std::filesystem::path& path) const {
  write_file(path, serialize());
}

ImageStore ImageStore::load(const std::filesystem::path& path) {
  return deserialize(read_file(path), path.string());
}

std::vector<float> pseudo_embed(std::string_view bytes, std::size_t dim) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  std::uint64_t state = hash;
  auto splitmix = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::vector<double> raw(dim);
  double norm = 0.0;
  for (double& x : raw) {
    x = static_cast<double>(splitmix() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] / norm);
  return out;
}

std::vector<float> pseudo_embed_file(const std::filesystem::path& path) {
  return pseudo_embed(read_file(path));
}

}  // namespace memecap
