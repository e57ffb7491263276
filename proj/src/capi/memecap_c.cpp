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

#include "memecap/memecap.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <new>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "checkpoint.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "image_store.hpp"
#include "inference.hpp"
#include "io_util.hpp"
#include "model.hpp"
#include "training.hpp"

struct memecap_images {
  memecap::ImageStore store;
};

struct memecap_model {
  memecap::AnyModel model;
};

struct memecap_captions {
  std::vector<std::string> texts;
  std::vector<double> log_probs;
  std::vector<std::string> warnings;
};

namespace {

using namespace memecap;

thread_local std::string g_last_error;

memecap_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
      return MEMECAP_ERR_VALIDATION;
    case ErrorCode::kIo:
      return MEMECAP_ERR_IO;
    case ErrorCode::kNumeric:
      return MEMECAP_ERR_NUMERIC;
    case ErrorCode::kFormat:
      return MEMECAP_ERR_FORMAT;
    case ErrorCode::kShape:
      return MEMECAP_ERR_SHAPE;
    case ErrorCode::kOutOfRange:
      return MEMECAP_ERR_RANGE;
  }
  return MEMECAP_ERR_INTERNAL;
}

template <typename F>
memecap_status guarded(F&& body) {
  try {
    body();
    return MEMECAP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return MEMECAP_ERR_INTERNAL;
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kValidation, what);
}

void require_path(const char* path, const char* name) {
  require(path != nullptr && *path != '\0', std::string(name) + " is required");
}

TrainConfig to_train_config(const memecap_train_options& o) {
  TrainConfig c;
  c.optimizer = o.optimizer == MEMECAP_OPTIMIZER_MOMENTUM
                    ? OptimizerKind::kMomentum
                    : OptimizerKind::kSgd;
  c.momentum = o.momentum;
  c.learning_rate = o.learning_rate;
  c.lr_decay_factor = o.lr_decay_factor;
  c.lr_decay_every = o.lr_decay_every;
  c.batch_size = o.batch_size;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.clip_norm = o.clip_norm;
  c.freeze_embeddings = o.freeze_embeddings != 0;
  c.threads = o.threads;
  return c;
}

// Every problem across model, training and path options, reported at once.
void validate_train_options(const memecap_train_options& o) {
  std::vector<std::string> problems;
  auto collect = [&](auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      const auto lines = split(e.what(), '\n');
      for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        problems.emplace_back(line);
      }
      if (lines.size() <= 1) problems.emplace_back(e.what());
    }
  };
  for (auto [path, name] : {std::pair{o.data_path, "data path"},
                            std::pair{o.vocab_path, "vocab path"},
                            std::pair{o.images_path, "images path"},
                            std::pair{o.checkpoint_path, "checkpoint path"}}) {
    if (path == nullptr || *path == '\0') problems.push_back(std::string(name) + " is required");
  }
  if (o.variant < MEMECAP_VARIANT_IMAGE_ONLY || o.variant > MEMECAP_VARIANT_ATTENTION) {
    problems.push_back("variant must be 1, 2 or 3");
  }
  if (o.precision != 32 && o.precision != 64) {
    problems.push_back("precision must be 32 or 64");
  }
  if (o.optimizer != MEMECAP_OPTIMIZER_SGD &&
      o.optimizer != MEMECAP_OPTIMIZER_MOMENTUM) {
    problems.push_back("optimizer must be sgd or momentum");
  }
  collect([&] {
    ModelConfig m;
    m.variant = static_cast<EncoderVariant>(
        std::clamp<int>(o.variant, 1, 3));
    m.layers = o.layers;
    m.hidden = o.hidden;
    m.embed_dim = o.embed_dim;
    m.vocab_size = kNumSpecialTokens;
    m.validate();
  });
  collect([&] { to_train_config(o).validate(); });
  if (problems.empty()) return;
  std::string message = "invalid training configuration:";
  for (const auto& p : problems) message += "\n  " + p;
  fail(ErrorCode::kValidation, message);
}

DecodeConfig to_decode_config(const memecap_decode_options& o) {
  DecodeConfig c;
  switch (o.mode) {
    case MEMECAP_DECODE_GREEDY:
      c.mode = DecodeMode::kGreedy;
      break;
    case MEMECAP_DECODE_BEAM:
      c.mode = DecodeMode::kBeam;
      break;
    case MEMECAP_DECODE_TEMPERATURE_BEAM:
      c.mode = DecodeMode::kTemperatureBeam;
      break;
    default:
      fail(ErrorCode::kValidation, "unknown decode mode");
  }
  c.k = o.k;
  c.temperature = o.temperature;
  c.top_m = o.top_m;
  c.max_len = o.max_len;
  c.seed = o.seed;
  c.length_normalize = o.length_normalize != 0;
  c.validate();
  return c;
}

template <typename T>
void run_training(const memecap_train_options& o, const Dataset& data,
                  const ImageStore& store, memecap_epoch_callback callback,
                  void* user_data) {
  ModelConfig mc;
  mc.variant = static_cast<EncoderVariant>(o.variant);
  mc.layers = o.layers;
  mc.hidden = o.hidden;
  mc.embed_dim = o.embed_dim;
  mc.image_dim = kImageEmbeddingDim;
  mc.vocab_size = data.vocab.size();

  // Embeddings draw from their own stream so the weight stream does not
  // depend on whether a pretrained file was given.
  const std::uint64_t embed_seed = o.seed ^ 0x9e3779b97f4a7c15ull;
  EmbeddingMatrix<T> embeddings =
      o.glove_path != nullptr && *o.glove_path != '\0'
          ? load_glove<T>(o.glove_path, data.vocab, embed_seed, o.embed_dim)
          : random_embeddings<T>(data.vocab.size(), o.embed_dim, embed_seed);
  embeddings.trainable = o.freeze_embeddings == 0;
  Model<T> model = Model<T>::create(mc, data.vocab, o.seed, std::move(embeddings));

  const ImageTable<T> images = to_image_table<T>(store);
  std::vector<MemeExample> eval;
  if (o.eval_path != nullptr && *o.eval_path != '\0') {
    eval = load_dataset(o.eval_path, data.vocab).examples;
    for (const auto& e : eval) image_for(images, e.image_id);
  }

  std::ofstream metrics;
  if (o.metrics_path != nullptr && *o.metrics_path != '\0') {
    metrics.open(o.metrics_path, std::ios::binary | std::ios::trunc);
    if (!metrics) {
      fail(ErrorCode::kIo, std::string("cannot write metrics file ") + o.metrics_path);
    }
  }
  train(model, data.examples, images, to_train_config(o), eval,
        [&](const EpochMetrics& m) {
          if (metrics.is_open()) {
            metrics << format_metrics_line(m) << '\n';
            metrics.flush();
          }
          if (callback != nullptr) {
            callback(m.epoch, m.train_loss, m.eval_perplexity, m.learning_rate,
                     user_data);
          }
        });
  save_checkpoint(model, o.checkpoint_path);
}

template <typename T>
void run_evaluate(const Model<T>& model, const memecap_eval_options& o,
                  memecap_eval_report& report) {
  if (o.vocab_path != nullptr && *o.vocab_path != '\0') {
    if (!(Vocabulary::load(o.vocab_path) == model.vocab)) {
      fail(ErrorCode::kValidation, std::string("vocabulary mismatch: ") +
                                       o.vocab_path +
                                       " differs from the checkpoint vocabulary");
    }
  }
  const DecodeConfig decode = to_decode_config(o.decode);
  const ImageStore store = ImageStore::load(o.images_path);
  const ImageTable<T> images = to_image_table<T>(store);
  const Dataset eval = load_dataset(o.eval_path, model.vocab);
  if (eval.examples.empty()) {
    fail(ErrorCode::kValidation, std::string("empty evaluation set: ") + o.eval_path);
  }
  const EvalReport pp = perplexity(model, eval.examples, images);

  std::vector<std::string> train_captions;
  for (const auto& row : read_raw_examples(o.train_path)) {
    train_captions.push_back(row.caption);
  }
  const DupIndex index = DupIndex::build_from_text(train_captions);

  // One generation per distinct (image, label) pair, in first-seen order.
  std::set<std::pair<std::string, std::vector<TokenId>>> seen;
  std::size_t exact = 0, near = 0, generated = 0;
  for (const auto& example : eval.examples) {
    if (!seen.insert({example.image_id, example.label_ids}).second) continue;
    const EncoderOutput<T> encoded =
        encode(model, image_for(images, example.image_id), example.label_ids);
    for (const auto& scored : memecap::decode(model, encoded, decode)) {
      const auto words = decode_ids(scored.token_ids, model.vocab);
      std::vector<std::string> tokens;
      for (const auto& w : words) {
        if (w != kStartToken && w != kEndToken) tokens.push_back(w);
      }
      const CopyResult r = copy_check(std::span<const std::string>(tokens), index,
                                      o.near_dup_threshold);
      if (r.kind == CopyKind::kExact) ++exact;
      if (r.kind == CopyKind::kNear) ++near;
      ++generated;
    }
  }
  report.perplexity = pp.perplexity;
  report.examples = eval.examples.size();
  report.generated = generated;
  report.exact_copies = exact;
  report.near_copies = near;
  report.near_dup_threshold = o.near_dup_threshold;
  report.percent_in_data =
      generated == 0 ? 0.0
                     : 100.0 * static_cast<double>(exact + near) /
                           static_cast<double>(generated);
}

}  // namespace

extern "C" {

const char* memecap_version(void) { return "1.0.0"; }

const char* memecap_status_string(memecap_status status) {
  switch (status) {
    case MEMECAP_OK:
      return "ok";
    case MEMECAP_ERR_VALIDATION:
      return "validation error";
    case MEMECAP_ERR_IO:
      return "i/o error";
    case MEMECAP_ERR_NUMERIC:
      return "numeric error";
    case MEMECAP_ERR_FORMAT:
      return "format error";
    case MEMECAP_ERR_SHAPE:
      return "shape error";
    case MEMECAP_ERR_RANGE:
      return "out of range";
    case MEMECAP_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* memecap_last_error(void) { return g_last_error.c_str(); }

size_t memecap_image_dim(void) { return kImageEmbeddingDim; }

memecap_status memecap_preprocess(const char* raw_path, const char* out_dir,
                                  int min_count,
                                  memecap_preprocess_stats* stats) {
  return guarded([&] {
    require_path(raw_path, "raw dataset path");
    require_path(out_dir, "output directory");
    require(min_count >= 1, "min_count must be >= 1");
    const auto result = preprocess(read_raw_examples(raw_path), min_count);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create directory " + dir.string());
    write_examples(result.kept, dir / "processed.tsv");
    result.dataset.vocab.save(dir / "vocab.tsv");
    const auto& s = result.stats;
    write_file(dir / "stats.tsv",
               "total\t" + std::to_string(s.total) + "\nkept\t" +
                   std::to_string(s.kept) + "\nremoved\t" +
                   std::to_string(s.removed) + "\nvocab_size\t" +
                   std::to_string(s.vocab_size) + "\n");
    if (stats != nullptr) *stats = {s.total, s.kept, s.removed, s.vocab_size};
  });
}

memecap_status memecap_images_create(memecap_images** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    *out = new memecap_images{};
  });
}

memecap_status memecap_images_load(const char* path, memecap_images** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require_path(path, "image file path");
    *out = new memecap_images{ImageStore::load(path)};
  });
}

memecap_status memecap_images_save(const memecap_images* images,
                                   const char* path) {
  return guarded([&] {
    require(images != nullptr, "image store handle is NULL");
    require_path(path, "image file path");
    images->store.save(path);
  });
}

memecap_status memecap_images_put(memecap_images* images, const char* id,
                                  const float* values, size_t dim) {
  return guarded([&] {
    require(images != nullptr, "image store handle is NULL");
    require(id != nullptr, "image id is NULL");
    require(values != nullptr, "values pointer is NULL");
    images->store.put(id, std::vector<float>(values, values + dim));
  });
}

memecap_status memecap_images_get(const memecap_images* images, const char* id,
                                  float* out, size_t dim) {
  return guarded([&] {
    require(images != nullptr, "image store handle is NULL");
    require(id != nullptr && out != nullptr, "id or output pointer is NULL");
    const auto& v = images->store.at(id);
    if (dim != v.size()) {
      fail(ErrorCode::kShape, "image buffer holds " + std::to_string(dim) +
                                  " values, embedding has " +
                                  std::to_string(v.size()));
    }
    std::copy(v.begin(), v.end(), out);
  });
}

size_t memecap_images_count(const memecap_images* images) {
  return images == nullptr ? 0 : images->store.size();
}

const char* memecap_images_id(const memecap_images* images, size_t index) {
  if (images == nullptr || index >= images->store.size()) return nullptr;
  return images->store.ids()[index].c_str();
}

void memecap_images_free(memecap_images* images) { delete images; }

memecap_status memecap_pseudo_embed(const void* data, size_t size, float* out,
                                    size_t dim) {
  return guarded([&] {
    require(out != nullptr, "output pointer is NULL");
    require(data != nullptr || size == 0, "data pointer is NULL");
    require(dim > 0, "dimension must be positive");
    const auto v = pseudo_embed(
        std::string_view(static_cast<const char*>(data), size), dim);
    std::copy(v.begin(), v.end(), out);
  });
}

memecap_status memecap_pseudo_embed_file(const char* path, float* out,
                                         size_t dim) {
  return guarded([&] {
    require_path(path, "image path");
    require(out != nullptr, "output pointer is NULL");
    require(dim > 0, "dimension must be positive");
    const auto v = pseudo_embed(read_file(path), dim);
    std::copy(v.begin(), v.end(), out);
  });
}

void memecap_train_options_init(memecap_train_options* options,
                                memecap_optimizer optimizer) {
  if (options == nullptr) return;
  const TrainConfig d = TrainConfig::defaults(
      optimizer == MEMECAP_OPTIMIZER_MOMENTUM ? OptimizerKind::kMomentum
                                              : OptimizerKind::kSgd);
  const ModelConfig m;
  *options = memecap_train_options{};
  options->variant = static_cast<memecap_variant>(m.variant);
  options->layers = m.layers;
  options->hidden = m.hidden;
  options->embed_dim = m.embed_dim;
  options->precision = 32;
  options->optimizer = optimizer;
  options->momentum = d.momentum;
  options->learning_rate = d.learning_rate;
  options->lr_decay_factor = d.lr_decay_factor;
  options->lr_decay_every = d.lr_decay_every;
  options->batch_size = d.batch_size;
  options->epochs = d.epochs;
  options->seed = d.seed;
  options->clip_norm = d.clip_norm;
  options->freeze_embeddings = 0;
  options->threads = std::max(1u, std::thread::hardware_concurrency());
}

memecap_status memecap_train_options_validate(
    const memecap_train_options* options) {
  return guarded([&] {
    require(options != nullptr, "options pointer is NULL");
    validate_train_options(*options);
  });
}

memecap_status memecap_train(const memecap_train_options* options,
                             memecap_epoch_callback callback,
                             void* user_data) {
  return guarded([&] {
    require(options != nullptr, "options pointer is NULL");
    const memecap_train_options& o = *options;
    validate_train_options(o);
    const Vocabulary vocab = Vocabulary::load(o.vocab_path);
    const Dataset data = load_dataset(o.data_path, vocab);
    if (data.examples.empty()) {
      fail(ErrorCode::kValidation, std::string("empty training set: ") + o.data_path);
    }
    if (o.variant != MEMECAP_VARIANT_IMAGE_ONLY) {
      const bool any_label =
          std::any_of(data.examples.begin(), data.examples.end(),
                      [](const MemeExample& e) { return !e.label_ids.empty(); });
      if (!any_label) {
        fail(ErrorCode::kValidation,
             "encoder variants 2 and 3 need labels but every label in " +
                 std::string(o.data_path) + " is empty");
      }
    }
    const ImageStore store = ImageStore::load(o.images_path);
    for (const auto& e : data.examples) {
      if (!store.contains(e.image_id)) {
        fail(ErrorCode::kValidation, "image id '" + e.image_id + "' from " +
                                         o.data_path + " is missing from " +
                                         o.images_path);
      }
    }
    if (o.precision == 64) {
      run_training<double>(o, data, store, callback, user_data);
    } else {
      run_training<float>(o, data, store, callback, user_data);
    }
  });
}

memecap_status memecap_model_load(const char* path, memecap_model** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is NULL");
    require_path(path, "checkpoint path");
    *out = new memecap_model{load_checkpoint(path)};
  });
}

void memecap_model_free(memecap_model* model) { delete model; }

namespace {

const ModelConfig& config_of(const memecap_model* model) {
  return std::visit([](const auto& m) -> const ModelConfig& { return m.config; },
                    model->model);
}

}  // namespace

memecap_variant memecap_model_variant(const memecap_model* model) {
  return static_cast<memecap_variant>(config_of(model).variant);
}
size_t memecap_model_layers(const memecap_model* model) {
  return config_of(model).layers;
}
size_t memecap_model_hidden(const memecap_model* model) {
  return config_of(model).hidden;
}
size_t memecap_model_vocab_size(const memecap_model* model) {
  return config_of(model).vocab_size;
}
size_t memecap_model_image_dim(const memecap_model* model) {
  return config_of(model).image_dim;
}
int memecap_model_precision(const memecap_model* model) {
  return std::holds_alternative<Model<double>>(model->model) ? 64 : 32;
}

void memecap_decode_options_init(memecap_decode_options* options) {
  if (options == nullptr) return;
  const DecodeConfig d;
  *options = memecap_decode_options{};
  options->mode = MEMECAP_DECODE_TEMPERATURE_BEAM;
  options->k = d.k;
  options->temperature = d.temperature;
  options->top_m = d.top_m;
  options->max_len = d.max_len;
  options->seed = d.seed;
  options->length_normalize = d.length_normalize ? 1 : 0;
}

memecap_status memecap_generate(const memecap_model* model, const float* image,
                                size_t image_dim, const char* label,
                                const memecap_decode_options* options,
                                memecap_captions** out) {
  return guarded([&] {
    require(model != nullptr && image != nullptr && options != nullptr &&
                out != nullptr,
            "NULL argument to memecap_generate");
    const DecodeConfig config = to_decode_config(*options);
    std::optional<std::string> text;
    if (label != nullptr) text = std::string(label);
    auto captions = std::make_unique<memecap_captions>();
    std::visit(
        [&](const auto& m) {
          using T = typename std::decay_t<decltype(m)>::scalar_type;
          if (image_dim != m.config.image_dim) {
            fail(ErrorCode::kShape, "image has " + std::to_string(image_dim) +
                                        " values, model expects " +
                                        std::to_string(m.config.image_dim));
          }
          const Vector<T> v(std::vector<T>(image, image + image_dim));
          GenerateResult result = generate(m, v, text, config);
          for (auto& c : result.captions) {
            captions->texts.push_back(std::move(c.text));
            captions->log_probs.push_back(c.log_prob);
          }
          captions->warnings = std::move(result.warnings);
        },
        model->model);
    *out = captions.release();
  });
}

size_t memecap_captions_count(const memecap_captions* captions) {
  return captions == nullptr ? 0 : captions->texts.size();
}

const char* memecap_captions_text(const memecap_captions* captions,
                                  size_t index) {
  if (captions == nullptr || index >= captions->texts.size()) return nullptr;
  return captions->texts[index].c_str();
}

double memecap_captions_log_prob(const memecap_captions* captions,
                                 size_t index) {
  if (captions == nullptr || index >= captions->log_probs.size()) return 0.0;
  return captions->log_probs[index];
}

size_t memecap_captions_warning_count(const memecap_captions* captions) {
  return captions == nullptr ? 0 : captions->warnings.size();
}

const char* memecap_captions_warning(const memecap_captions* captions,
                                     size_t index) {
  if (captions == nullptr || index >= captions->warnings.size()) return nullptr;
  return captions->warnings[index].c_str();
}

void memecap_captions_free(memecap_captions* captions) { delete captions; }

void memecap_eval_options_init(memecap_eval_options* options) {
  if (options == nullptr) return;
  *options = memecap_eval_options{};
  options->near_dup_threshold = kDefaultNearDupThreshold;
  memecap_decode_options_init(&options->decode);
}

memecap_status memecap_evaluate(const memecap_model* model,
                                const memecap_eval_options* options,
                                memecap_eval_report* report) {
  return guarded([&] {
    require(model != nullptr && options != nullptr && report != nullptr,
            "NULL argument to memecap_evaluate");
    require_path(options->eval_path, "eval set path");
    require_path(options->train_path, "training set path");
    require_path(options->images_path, "images path");
    require(options->near_dup_threshold > 0.0 &&
                options->near_dup_threshold <= 1.0,
            "near-duplicate threshold must be in (0, 1]");
    memecap_eval_report r{};
    std::visit([&](const auto& m) { run_evaluate(m, *options, r); },
               model->model);
    *report = r;
  });
}

}  // extern "C"
