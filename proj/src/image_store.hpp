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

// Precomputed image embeddings.
//
// File layout: "IMGE0001", then records until end of file, each a u32
// little-endian byte length, that many bytes of UTF-8 id, and 2048 IEEE-754
// little-endian float32 values.

#ifndef MEMECAP_IMAGE_STORE_HPP_
#define MEMECAP_IMAGE_STORE_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "numerics.hpp"

namespace memecap {

inline constexpr std::string_view kImageStoreMagic = "IMGE0001";
inline constexpr std::size_t kImageEmbeddingDim = 2048;

class ImageStore {
 public:
  // Replaces an existing id.
  void put(const std::string& id, std::vector<float> values);
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  // Throws kValidation for unknown ids.
  const std::vector<float>& at(const std::string& id) const;
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

  template <typename T>
  Vector<T> vector(const std::string& id) const {
    const auto& v = at(id);
    return Vector<T>(std::vector<T>(v.begin(), v.end()));
  }

  std::string serialize() const;
  static ImageStore deserialize(std::string_view bytes,
                                const std::string& source);
  void save(const std::filesystem::path& path) const;
  static ImageStore load(const std::filesystem::path& path);

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<float>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Image vectors keyed by id, converted to the model's scalar type. Unlike
// the file format, the dimension is not fixed here.
template <typename T>
using ImageTable = std::unordered_map<std::string, Vector<T>>;

template <typename T>
ImageTable<T> to_image_table(const ImageStore& store) {
  ImageTable<T> table;
  for (const auto& id : store.ids()) table.emplace(id, store.vector<T>(id));
  return table;
}

template <typename T>
const Vector<T>& image_for(const ImageTable<T>& table, const std::string& id) {
  const auto it = table.find(id);
  if (it == table.end()) {
    fail(ErrorCode::kValidation, "unknown image id '" + id + "'");
  }
  return it->second;
}

// Deterministic stand-in for a CNN: FNV-1a of the bytes seeds a SplitMix64
// stream of uniform [-1, 1) values, normalized to unit L2 norm.
std::vector<float> pseudo_embed(std::string_view bytes,
                                std::size_t dim = kImageEmbeddingDim);
std::vector<float> pseudo_embed_file(const std::filesystem::path& path);

}  // namespace memecap

#endif  // MEMECAP_IMAGE_STORE_HPP_
