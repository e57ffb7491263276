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

#include "checkpoint.hpp"

#include "error.hpp"
#include "io_util.hpp"

namespace memecap {
namespace {

template <typename T>
Model<T> read_model(ByteReader& in, const ModelConfig& config) {
  // Build the tensor layout with a throwaway seed, then overwrite every value.
  const std::uint32_t tensor_count = in.u32();
  std::vector<std::string> names;
  std::vector<std::vector<T>> values;
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    names.push_back(in.str());
    const std::uint64_t n = in.u64();
    if (n > in.remaining() / sizeof(T)) {
      fail(ErrorCode::kFormat, in.source() + ": bad tensor length");
    }
    std::vector<T> data;
    data.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t j = 0; j < n; ++j) {
      if constexpr (sizeof(T) == 4) {
        data.push_back(in.f32());
      } else {
        data.push_back(in.f64());
      }
    }
    values.push_back(std::move(data));
  }
  const std::uint64_t vocab_length = in.u64();
  Vocabulary vocab = Vocabulary::from_text(
      in.bytes(static_cast<std::size_t>(vocab_length)), in.source() + "#vocab");
  if (!in.at_end()) {
    fail(ErrorCode::kFormat, in.source() + ": trailing bytes after vocabulary");
  }

  Model<T> model = Model<T>::create(config, std::move(vocab), 0);
  auto tensors = model.params.tensors();
  if (tensors.size() != names.size()) {
    fail(ErrorCode::kFormat, in.source() + ": expected " +
                                 std::to_string(tensors.size()) +
                                 " tensors, found " +
                                 std::to_string(names.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& [name, span] = tensors[i];
    if (name != names[i] || span.size() != values[i].size()) {
      fail(ErrorCode::kFormat, in.source() + ": tensor " + std::to_string(i) +
                                   " is '" + names[i] + "' with " +
                                   std::to_string(values[i].size()) +
                                   " values, expected '" + name + "' with " +
                                   std::to_string(span.size()));
    }
    std::copy(values[i].begin(), values[i].end(), span.begin());
  }
  return model;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const Model<T>& model) {
  ByteWriter out;
  out.bytes(kCheckpointMagic);
  const ModelConfig& c = model.config;
  out.u32(static_cast<std::uint32_t>(c.variant));
  out.u32(static_cast<std::uint32_t>(c.layers));
  out.u32(static_cast<std::uint32_t>(c.hidden));
  out.u32(static_cast<std::uint32_t>(c.vocab_size));
  out.u32(static_cast<std::uint32_t>(c.embed_dim));
  out.u32(static_cast<std::uint32_t>(c.image_dim));
  out.u32(static_cast<std::uint32_t>(precision_of<T>()));

  const auto tensors = model.params.tensors();
  out.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, values] : tensors) {
    out.str(name);
    out.u64(values.size());
    for (T v : values) {
      if constexpr (sizeof(T) == 4) {
        out.f32(v);
      } else {
        out.f64(v);
      }
    }
  }
  const std::string vocab = model.vocab.to_text();
  out.u64(vocab.size());
  out.bytes(vocab);
  return out.buffer();
}

template <typename T>
void save_checkpoint(const Model<T>& model, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(model));
}

AnyModel deserialize_checkpoint(std::string_view bytes,
                                const std::string& source) {
  ByteReader in(bytes, source);
  if (in.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    fail(ErrorCode::kFormat, source + ": not a checkpoint (bad magic)");
  }
  ModelConfig config;
  config.variant = static_cast<EncoderVariant>(in.u32());
  config.layers = in.u32();
  config.hidden = in.u32();
  config.vocab_size = in.u32();
  config.embed_dim = in.u32();
  config.image_dim = in.u32();
  const std::uint32_t precision = in.u32();
  try {
    config.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, source + ": " + e.what());
  }
  if (precision == 32) return read_model<float>(in, config);
  if (precision == 64) return read_model<double>(in, config);
  fail(ErrorCode::kFormat,
       source + ": unknown precision flag " + std::to_string(precision));
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path), path.string());
}

template std::string serialize_checkpoint(const Model<float>&);
template std::string serialize_checkpoint(const Model<double>&);
template void save_checkpoint(const Model<float>&, const std::filesystem::path&);
template void save_checkpoint(const Model<double>&,
                              const std::filesystem::path&);

}  // namespace memecap
