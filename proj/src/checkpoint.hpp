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

// Checkpoint layout (all integers u32 little-endian unless noted):
//
//   "MEMELM01"
//   variant, layers, hidden, vocab_size, embed_dim, image_dim, precision (32|64)
//   tensor_count
//   tensor_count x { name (u32 length + bytes), value_count (u64),
//                    values (IEEE-754 LE, 4 or 8 bytes each) }
//   vocab_length (u64), vocabulary text (`token \t count` lines)

#ifndef MEMECAP_CHECKPOINT_HPP_
#define MEMECAP_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "model.hpp"

namespace memecap {

inline constexpr std::string_view kCheckpointMagic = "MEMELM01";

template <typename T>
constexpr Precision precision_of() {
  return sizeof(T) == 4 ? Precision::kFloat32 : Precision::kFloat64;
}

template <typename T>
std::string serialize_checkpoint(const Model<T>& model);

template <typename T>
void save_checkpoint(const Model<T>& model, const std::filesystem::path& path);

using AnyModel = std::variant<Model<float>, Model<double>>;

AnyModel deserialize_checkpoint(std::string_view bytes,
                                const std::string& source = "<checkpoint>");
AnyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace memecap

#endif  // MEMECAP_CHECKPOINT_HPP_
