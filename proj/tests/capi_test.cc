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

// Drives the shared library through memecap/memecap.h only.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "memecap/memecap.h"

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string last_error() { return memecap_last_error(); }

// Three templates, six captions each, labelled and image-embedded.
class CapiPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "memecap_capi";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const char* subjects[] = {"cats", "dogs", "kids"};
    const char* slots[] = {"mondays", "pizza", "rain", "naps", "tests", "wifi"};
    std::string raw;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 6; ++j) {
        raw += "t" + std::to_string(i) + "\t" + subjects[i] + " meme\twhen " +
               subjects[i] + " see " + slots[j] + " they run\n";
      }
    }
    spit(dir_ / "raw.tsv", raw);
    memecap_preprocess_stats stats{};
    ASSERT_EQ(memecap_preprocess((dir_ / "raw.tsv").c_str(),
                                 (dir_ / "pre").c_str(), 1, &stats),
              MEMECAP_OK)
        << last_error();

    memecap_images* images = nullptr;
    ASSERT_EQ(memecap_images_create(&images), MEMECAP_OK);
    std::vector<float> v(memecap_image_dim());
    for (int i = 0; i < 3; ++i) {
      const std::string id = "t" + std::to_string(i);
      ASSERT_EQ(memecap_pseudo_embed(id.data(), id.size(), v.data(), v.size()),
                MEMECAP_OK);
      ASSERT_EQ(memecap_images_put(images, id.c_str(), v.data(), v.size()),
                MEMECAP_OK);
    }
    ASSERT_EQ(memecap_images_save(images, (dir_ / "images.bin").c_str()),
              MEMECAP_OK);
    memecap_images_free(images);

    memecap_train_options o = options();
    ASSERT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_OK) << last_error();
  }

  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static memecap_train_options options() {
    static std::string data, vocab, images, checkpoint;
    data = (dir_ / "pre" / "processed.tsv").string();
    vocab = (dir_ / "pre" / "vocab.tsv").string();
    images = (dir_ / "images.bin").string();
    checkpoint = (dir_ / "model.ckpt").string();
    memecap_train_options o;
    memecap_train_options_init(&o, MEMECAP_OPTIMIZER_SGD);
    o.data_path = data.c_str();
    o.vocab_path = vocab.c_str();
    o.images_path = images.c_str();
    o.checkpoint_path = checkpoint.c_str();
    o.variant = MEMECAP_VARIANT_ATTENTION;
    o.hidden = 8;
    o.embed_dim = 8;
    o.epochs = 2;
    o.threads = 1;
    return o;
  }

  void SetUp() override {
    ASSERT_EQ(memecap_model_load((dir_ / "model.ckpt").c_str(), &model_),
              MEMECAP_OK)
        << last_error();
    image_.resize(memecap_image_dim());
    ASSERT_EQ(memecap_pseudo_embed("t1", 2, image_.data(), image_.size()),
              MEMECAP_OK);
  }
  void TearDown() override { memecap_model_free(model_); }

  std::vector<std::string> captions(const memecap_decode_options& d,
                                    const char* label = "dogs meme") {
    memecap_captions* c = nullptr;
    EXPECT_EQ(memecap_generate(model_, image_.data(), image_.size(), label, &d, &c),
              MEMECAP_OK)
        << last_error();
    std::vector<std::string> out;
    for (std::size_t i = 0; i < memecap_captions_count(c); ++i) {
      out.push_back(memecap_captions_text(c, i));
    }
    memecap_captions_free(c);
    return out;
  }

  memecap_eval_options eval_options() {
    static std::string data, images;
    data = (dir_ / "pre" / "processed.tsv").string();
    images = (dir_ / "images.bin").string();
    memecap_eval_options o;
    memecap_eval_options_init(&o);
    o.eval_path = data.c_str();
    o.train_path = data.c_str();
    o.images_path = images.c_str();
    o.decode.mode = MEMECAP_DECODE_GREEDY;
    return o;
  }

  static fs::path dir_;
  memecap_model* model_ = nullptr;
  std::vector<float> image_;
};

fs::path CapiPipeline::dir_;

TEST(CapiTest, StatusStringsAndVersion) {
  EXPECT_STREQ(memecap_status_string(MEMECAP_OK), "ok");
  EXPECT_STREQ(memecap_status_string(MEMECAP_ERR_IO), "i/o error");
  EXPECT_STRNE(memecap_version(), "");
  EXPECT_EQ(memecap_image_dim(), 2048u);
}

TEST(CapiTest, PreprocessFixtureStats) {
  const fs::path out = fs::temp_directory_path() / "memecap_capi_pre";
  fs::remove_all(out);
  memecap_preprocess_stats s{};
  ASSERT_EQ(memecap_preprocess(MEMECAP_TEST_DATA "/preprocess_fixture.tsv",
                               out.c_str(), 3, &s),
            MEMECAP_OK)
      << last_error();
  EXPECT_EQ(s.total, 30u);
  EXPECT_EQ(s.kept, 26u);
  EXPECT_EQ(s.removed, 4u);
  EXPECT_EQ(s.vocab_size, 10u);
  EXPECT_EQ(slurp(out / "stats.tsv"),
            "total\t30\nkept\t26\nremoved\t4\nvocab_size\t10\n");
  EXPECT_TRUE(fs::exists(out / "processed.tsv"));
  EXPECT_TRUE(fs::exists(out / "vocab.tsv"));
  fs::remove_all(out);
}

TEST(CapiTest, MissingInputIsIoErrorNamingPath) {
  const fs::path out = fs::temp_directory_path() / "memecap_capi_missing";
  EXPECT_EQ(memecap_preprocess("/nonexistent/raw.tsv", out.c_str(), 3, nullptr),
            MEMECAP_ERR_IO);
  EXPECT_NE(last_error().find("/nonexistent/raw.tsv"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST(CapiTest, NullArgumentsAreValidationErrors) {
  EXPECT_EQ(memecap_preprocess(nullptr, "x", 3, nullptr), MEMECAP_ERR_VALIDATION);
  EXPECT_EQ(memecap_model_load("x", nullptr), MEMECAP_ERR_VALIDATION);
  EXPECT_EQ(memecap_train(nullptr, nullptr, nullptr), MEMECAP_ERR_VALIDATION);
  EXPECT_EQ(memecap_images_count(nullptr), 0u);
  EXPECT_EQ(memecap_captions_text(nullptr, 0), nullptr);
}

TEST(CapiTest, ImageStoreRoundTrip) {
  memecap_images* a = nullptr;
  ASSERT_EQ(memecap_images_create(&a), MEMECAP_OK);
  std::vector<float> v(memecap_image_dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.5f;
  ASSERT_EQ(memecap_images_put(a, "x", v.data(), v.size()), MEMECAP_OK);
  EXPECT_EQ(memecap_images_put(a, "short", v.data(), 10), MEMECAP_ERR_SHAPE);
  const fs::path path = fs::temp_directory_path() / "memecap_capi_images.bin";
  ASSERT_EQ(memecap_images_save(a, path.c_str()), MEMECAP_OK);
  memecap_images_free(a);

  memecap_images* b = nullptr;
  ASSERT_EQ(memecap_images_load(path.c_str(), &b), MEMECAP_OK);
  ASSERT_EQ(memecap_images_count(b), 1u);
  EXPECT_STREQ(memecap_images_id(b, 0), "x");
  EXPECT_EQ(memecap_images_id(b, 1), nullptr);
  std::vector<float> back(v.size());
  ASSERT_EQ(memecap_images_get(b, "x", back.data(), back.size()), MEMECAP_OK);
  EXPECT_EQ(back, v);
  EXPECT_EQ(memecap_images_get(b, "x", back.data(), 3), MEMECAP_ERR_SHAPE);
  EXPECT_EQ(memecap_images_get(b, "nope", back.data(), back.size()),
            MEMECAP_ERR_VALIDATION);
  memecap_images_free(b);
  fs::remove(path);
}

TEST(CapiTest, CorruptImageFileIsFormatError) {
  const fs::path path = fs::temp_directory_path() / "memecap_capi_bad.bin";
  spit(path, "NOTMAGIC");
  memecap_images* images = nullptr;
  EXPECT_EQ(memecap_images_load(path.c_str(), &images), MEMECAP_ERR_FORMAT);
  EXPECT_EQ(images, nullptr);
  fs::remove(path);
}

TEST(CapiTest, PseudoEmbedIsDeterministicUnitNorm) {
  std::vector<float> a(memecap_image_dim()), b(memecap_image_dim());
  ASSERT_EQ(memecap_pseudo_embed("abc", 3, a.data(), a.size()), MEMECAP_OK);
  ASSERT_EQ(memecap_pseudo_embed("abc", 3, b.data(), b.size()), MEMECAP_OK);
  EXPECT_EQ(a, b);
  double norm = 0.0;
  for (float x : a) norm += static_cast<double>(x) * x;
  EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
  ASSERT_EQ(memecap_pseudo_embed("abd", 3, b.data(), b.size()), MEMECAP_OK);
  EXPECT_NE(a, b);
}

TEST(CapiTest, TrainOptionDefaultsFollowOptimizer) {
  memecap_train_options sgd, mom;
  memecap_train_options_init(&sgd, MEMECAP_OPTIMIZER_SGD);
  memecap_train_options_init(&mom, MEMECAP_OPTIMIZER_MOMENTUM);
  EXPECT_DOUBLE_EQ(sgd.learning_rate, 0.1);
  EXPECT_DOUBLE_EQ(mom.learning_rate, 0.01);
  EXPECT_DOUBLE_EQ(mom.momentum, 0.9);
  EXPECT_GE(sgd.threads, 1u);
  EXPECT_EQ(sgd.precision, 32);
}

TEST(CapiTest, ValidationListsEveryProblem) {
  memecap_train_options o;
  memecap_train_options_init(&o, MEMECAP_OPTIMIZER_MOMENTUM);
  o.layers = 4;
  o.momentum = 1.0;
  o.batch_size = 0;
  EXPECT_EQ(memecap_train_options_validate(&o), MEMECAP_ERR_VALIDATION);
  const std::string msg = last_error();
  EXPECT_NE(msg.find("data path is required"), std::string::npos) << msg;
  EXPECT_NE(msg.find("layers"), std::string::npos) << msg;
  EXPECT_NE(msg.find("momentum"), std::string::npos) << msg;
  EXPECT_NE(msg.find("batch size"), std::string::npos) << msg;
}

TEST_F(CapiPipeline, ModelIntrospection) {
  EXPECT_EQ(memecap_model_variant(model_), MEMECAP_VARIANT_ATTENTION);
  EXPECT_EQ(memecap_model_layers(model_), 1u);
  EXPECT_EQ(memecap_model_hidden(model_), 8u);
  EXPECT_EQ(memecap_model_image_dim(model_), memecap_image_dim());
  EXPECT_EQ(memecap_model_precision(model_), 32);
  EXPECT_GT(memecap_model_vocab_size(model_), 3u);
}

TEST_F(CapiPipeline, GreedyEqualsBeamWidthOne) {
  memecap_decode_options greedy, beam;
  memecap_decode_options_init(&greedy);
  memecap_decode_options_init(&beam);
  greedy.mode = MEMECAP_DECODE_GREEDY;
  beam.mode = MEMECAP_DECODE_BEAM;
  beam.k = 1;
  EXPECT_EQ(captions(greedy), captions(beam));
}

TEST_F(CapiPipeline, SeededTemperatureBeamRepeats) {
  memecap_decode_options d;
  memecap_decode_options_init(&d);
  d.temperature = 0.7;
  d.seed = 42;
  const auto first = captions(d);
  EXPECT_EQ(first.size(), d.k);
  EXPECT_EQ(first, captions(d));
}

TEST_F(CapiPipeline, GenerateRejectsBadInput) {
  memecap_decode_options d;
  memecap_decode_options_init(&d);
  d.temperature = -1.0;
  memecap_captions* c = nullptr;
  EXPECT_EQ(memecap_generate(model_, image_.data(), image_.size(), "x", &d, &c),
            MEMECAP_ERR_VALIDATION);
  EXPECT_EQ(c, nullptr);
  memecap_decode_options_init(&d);
  EXPECT_EQ(memecap_generate(model_, image_.data(), 5, "x", &d, &c),
            MEMECAP_ERR_SHAPE);
}

TEST_F(CapiPipeline, MissingLabelFallsBackToUnk) {
  memecap_decode_options d;
  memecap_decode_options_init(&d);
  d.mode = MEMECAP_DECODE_GREEDY;
  memecap_captions* c = nullptr;
  ASSERT_EQ(memecap_generate(model_, image_.data(), image_.size(), nullptr, &d, &c),
            MEMECAP_OK);
  EXPECT_EQ(memecap_captions_warning_count(c), 0u);
  EXPECT_EQ(memecap_captions_count(c), 1u);
  memecap_captions_free(c);
  // An empty string is the same as no label.
  std::vector<std::string> none = captions(d, nullptr);
  EXPECT_EQ(none, captions(d, ""));
}

TEST_F(CapiPipeline, EvaluateReportsPerplexityAndCopies) {
  memecap_eval_options o = eval_options();
  memecap_eval_report r{};
  ASSERT_EQ(memecap_evaluate(model_, &o, &r), MEMECAP_OK) << last_error();
  EXPECT_GE(r.perplexity, 1.0);
  EXPECT_EQ(r.examples, 18u);
  EXPECT_EQ(r.generated, 3u);  // one greedy caption per (image, label)
  EXPECT_GE(r.percent_in_data, 0.0);
  EXPECT_LE(r.percent_in_data, 100.0);
  EXPECT_DOUBLE_EQ(r.near_dup_threshold, 0.8);
}

TEST_F(CapiPipeline, EvaluateRejectsForeignVocabulary) {
  const fs::path vocab = dir_ / "other_vocab.tsv";
  spit(vocab, "<s>\t0\n</s>\t0\n<unk>\t0\nzzz\t9\n");
  memecap_eval_options o = eval_options();
  const std::string path = vocab.string();
  o.vocab_path = path.c_str();
  memecap_eval_report r{};
  EXPECT_EQ(memecap_evaluate(model_, &o, &r), MEMECAP_ERR_VALIDATION);
  EXPECT_NE(last_error().find("vocabulary mismatch"), std::string::npos)
      << last_error();
  const std::string own = (dir_ / "pre" / "vocab.tsv").string();
  o.vocab_path = own.c_str();
  EXPECT_EQ(memecap_evaluate(model_, &o, &r), MEMECAP_OK) << last_error();
}

TEST_F(CapiPipeline, EvaluateRejectsEmptyEvalSet) {
  const fs::path empty = dir_ / "empty.tsv";
  spit(empty, "");
  memecap_eval_options o = eval_options();
  const std::string path = empty.string();
  o.eval_path = path.c_str();
  memecap_eval_report r{};
  EXPECT_EQ(memecap_evaluate(model_, &o, &r), MEMECAP_ERR_VALIDATION);
}

TEST_F(CapiPipeline, TrainingIsDeterministicAndReportsEpochs) {
  memecap_train_options o = options();
  const std::string again = (dir_ / "again.ckpt").string();
  const std::string metrics = (dir_ / "metrics.tsv").string();
  o.checkpoint_path = again.c_str();
  o.metrics_path = metrics.c_str();
  std::vector<int> epochs;
  ASSERT_EQ(memecap_train(
                &o,
                [](int epoch, double loss, double pp, double, void* user) {
                  EXPECT_TRUE(std::isfinite(loss));
                  EXPECT_GE(pp, 1.0);
                  static_cast<std::vector<int>*>(user)->push_back(epoch);
                },
                &epochs),
            MEMECAP_OK)
      << last_error();
  EXPECT_EQ(epochs, (std::vector<int>{1, 2}));
  EXPECT_EQ(slurp(again), slurp(dir_ / "model.ckpt"));
  const std::string m = slurp(metrics);
  EXPECT_EQ(std::count(m.begin(), m.end(), '\n'), 2);
  EXPECT_EQ(m.rfind("1\t", 0), 0u);
}

TEST_F(CapiPipeline, TrainRejectsUnknownImage) {
  const fs::path raw = dir_ / "stray.tsv";
  spit(raw, "t0\tcats meme\twhen cats see rain they run\n"
            "ghost\tcats meme\twhen cats see rain they run\n");
  memecap_train_options o = options();
  const std::string data = raw.string();
  const std::string out = (dir_ / "stray.ckpt").string();
  o.data_path = data.c_str();
  o.checkpoint_path = out.c_str();
  EXPECT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_ERR_VALIDATION);
  EXPECT_NE(last_error().find("ghost"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CapiPipeline, LabelVariantsNeedLabels) {
  const fs::path raw = dir_ / "unlabelled.tsv";
  spit(raw, "t0\t\twhen cats see rain they run\n");
  memecap_train_options o = options();
  const std::string data = raw.string();
  o.data_path = data.c_str();
  o.variant = MEMECAP_VARIANT_GLOVE_AVERAGE;
  EXPECT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_ERR_VALIDATION);
  o.variant = MEMECAP_VARIANT_IMAGE_ONLY;
  const std::string out = (dir_ / "v1.ckpt").string();
  o.checkpoint_path = out.c_str();
  EXPECT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_OK) << last_error();
}

TEST_F(CapiPipeline, DivergenceIsNumericError) {
  memecap_train_options o = options();
  const std::string out = (dir_ / "nan.ckpt").string();
  o.checkpoint_path = out.c_str();
  o.learning_rate = 1e38;
  o.clip_norm = 1e30;
  EXPECT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_ERR_NUMERIC);
  EXPECT_NE(last_error().find("non-finite"), std::string::npos) << last_error();
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CapiPipeline, DoublePrecisionCheckpoint) {
  memecap_train_options o = options();
  const std::string out = (dir_ / "f64.ckpt").string();
  o.checkpoint_path = out.c_str();
  o.precision = 64;
  o.epochs = 1;
  ASSERT_EQ(memecap_train(&o, nullptr, nullptr), MEMECAP_OK) << last_error();
  memecap_model* m = nullptr;
  ASSERT_EQ(memecap_model_load(out.c_str(), &m), MEMECAP_OK);
  EXPECT_EQ(memecap_model_precision(m), 64);
  memecap_decode_options d;
  memecap_decode_options_init(&d);
  memecap_captions* c = nullptr;
  EXPECT_EQ(memecap_generate(m, image_.data(), image_.size(), "cats meme", &d, &c),
            MEMECAP_OK);
  memecap_captions_free(c);
  memecap_model_free(m);
}

}  // namespace
