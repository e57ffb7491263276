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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "corpus.hpp"
#include "eval.hpp"
#include "image_store.hpp"
#include "inference.hpp"
#include "io_util.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "test_util.hpp"
#include "training.hpp"

namespace {

using namespace memecap;
using namespace memecap::testing;
namespace mp = boost::multiprecision;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// ---- 1: gradient fidelity

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  Outcome out;
  double worst = 0.0;
  std::string worst_where;
  for (auto variant : {EncoderVariant::kImageOnly, EncoderVariant::kGloveAverage,
                       EncoderVariant::kAttentionLabels}) {
    for (std::size_t layers = 1; layers <= 3; ++layers) {
      TinySpec spec;
      spec.variant = variant;
      spec.layers = layers;
      spec.vocab = 20;
      spec.hidden = 8;
      const auto model = tiny_model<double>(spec);
      const auto image = random_image<double>(spec.image, 3);
      const auto example = example_of("img", {5, 9, 4}, {7, 3, 12, 19});
      const GradCheckResult r = grad_check(model, image, example);
      if (r.checked != model.params.parameter_count()) {
        out.pass = false;
        out.detail += "incomplete check; ";
      }
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        worst_where = to_string(variant) + " L=" + std::to_string(layers) +
                      " " + r.worst_tensor;
      }
    }
  }
  const double elapsed = seconds_since(start);
  out.pass = out.pass && worst < 1e-5 && elapsed < 60.0;
  std::ostringstream os;
  os << "max rel err " << worst << " (" << worst_where << "), " << elapsed
     << " s";
  out.detail += os.str();
  return out;
}

// ---- 2: memorization

double memorize(OptimizerKind optimizer, const Dataset& data,
                const ImageTable<float>& images) {
  ModelConfig mc;
  mc.variant = EncoderVariant::kGloveAverage;
  mc.layers = 1;
  mc.hidden = 32;
  mc.embed_dim = 32;
  mc.image_dim = kImageEmbeddingDim;
  mc.vocab_size = data.vocab.size();
  Model<float> model = Model<float>::create(mc, data.vocab, 11);
  TrainConfig tc = TrainConfig::defaults(optimizer);
  tc.learning_rate = optimizer == OptimizerKind::kSgd ? 1.0 : 0.1;
  tc.momentum = 0.9;
  tc.batch_size = 5;
  tc.epochs = 200;
  tc.lr_decay_factor = 1.0;
  tc.lr_decay_every = 1000;
  train(model, data.examples, images, tc);
  return perplexity(model, data.examples, images).perplexity;
}

Outcome memorization() {
  const auto start = Clock::now();
  const SyntheticCorpus corpus = synthetic_corpus(5, 10);
  const PreprocessResult pre = preprocess(corpus.rows, 1);
  ImageTable<float> images;
  for (const auto& id : corpus.image_ids) {
    images[id] = Vector<float>(pseudo_embed(id, kImageEmbeddingDim));
  }
  const double sgd = memorize(OptimizerKind::kSgd, pre.dataset, images);
  const double momentum = memorize(OptimizerKind::kMomentum, pre.dataset, images);
  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << pre.dataset.examples.size() << " captions, 200 epochs: PP sgd " << sgd
     << ", momentum " << momentum << ", " << elapsed << " s";
  return {pre.dataset.examples.size() == 50 && sgd < 1.5 && momentum < 1.5 &&
              elapsed < 300.0,
          os.str()};
}

// ---- 3: temperature function

// p_i^n / sum_j p_j^n in exact rational arithmetic.
std::vector<double> tempered_rational(const std::vector<double>& p, int n) {
  std::vector<mp::cpp_rational> powered;
  mp::cpp_rational total = 0;
  for (double x : p) {
    mp::cpp_rational r(x);  // doubles are exact dyadic rationals
    mp::cpp_rational acc = 1;
    for (int k = 0; k < n; ++k) acc *= r;
    powered.push_back(acc);
    total += acc;
  }
  std::vector<double> out;
  for (const auto& r : powered) out.push_back(static_cast<double>(r / total));
  return out;
}

// Same map at 50 significant digits for non-integer exponents.
std::vector<double> tempered_bigfloat(const std::vector<double>& p,
                                      double temperature) {
  using Big = mp::cpp_bin_float_50;
  const Big exponent = Big(1) / Big(temperature);
  std::vector<Big> powered;
  Big total = 0;
  for (double x : p) {
    powered.push_back(mp::pow(Big(x), exponent));
    total += powered.back();
  }
  std::vector<double> out;
  for (const auto& b : powered) out.push_back(static_cast<double>(b / total));
  return out;
}

Outcome temperature_exactness() {
  Rng rng(2024);
  double worst = 0.0;
  double identity_worst = 0.0;
  for (double temperature : {0.25, 0.5, 1.0, 2.0, 10.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.below(60);
      std::vector<double> p(n);
      double sum = 0.0;
      for (double& x : p) {
        // Spread over several decades so small entries are exercised.
        x = std::pow(10.0, -6.0 * rng.uniform(0.0, 1.0));
        sum += x;
      }
      for (double& x : p) x /= sum;
      const auto got = apply_temperature(p, temperature);
      const double inv = 1.0 / temperature;
      const auto want = inv == std::floor(inv)
                            ? tempered_rational(p, static_cast<int>(inv))
                            : tempered_bigfloat(p, temperature);
      for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(got[i] - want[i]));
        if (temperature == 1.0) {
          identity_worst = std::max(identity_worst, std::abs(got[i] - p[i]));
        }
      }
    }
  }
  std::ostringstream os;
  os << "max abs err " << worst << " over 500 distributions; T=1 identity err "
     << identity_worst;
  return {worst < 1e-9 && identity_worst < 1e-12, os.str()};
}

// ---- 4: decoding oracles

double recomputed_log_prob(const Model<double>& model,
                           const EncoderOutput<double>& encoded,
                           const std::vector<TokenId>& ids) {
  const auto logits = decoder_forward(
      model, encoded, std::span<const TokenId>(ids).first(ids.size() - 1));
  double total = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const Vector<double>& z = logits[t];
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    total += z[ids[t + 1]] - mx - std::log(s);
  }
  return total;
}

// Best score over every sequence a decoder of this max_len can emit.
double exhaustive_best(const Model<double>& model,
                       const EncoderOutput<double>& encoded,
                       std::size_t max_len) {
  const auto vocab = static_cast<TokenId>(model.config.vocab_size);
  double best = -INFINITY;
  std::vector<TokenId> ids{kStartId};
  std::function<void()> extend = [&] {
    for (TokenId t = 0; t < vocab; ++t) {
      ids.push_back(t);
      if (t == kEndId || ids.size() - 1 == max_len) {
        best = std::max(best, recomputed_log_prob(model, encoded, ids));
      } else {
        extend();
      }
      ids.pop_back();
    }
  };
  extend();
  return best;
}

Outcome decoding_oracles() {
  constexpr std::size_t kMaxLen = 3;
  double score_err = 0.0;
  bool greedy_ok = true, cold_ok = true, exhaustive_ok = true;
  int cases = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TinySpec spec;
    spec.variant = EncoderVariant::kAttentionLabels;
    spec.vocab = 5;
    spec.hidden = 4;
    spec.embed = 4;
    spec.image = 6;
    spec.seed = seed;
    spec.weight_scale = 12.0;
    const auto model = tiny_model<double>(spec);
    const auto encoded = encode(model, random_image<double>(spec.image, seed),
                                std::vector<TokenId>{3, 4});
    for (std::size_t k = 1; k <= 3; ++k) {
      ++cases;
      DecodeConfig beam;
      beam.mode = DecodeMode::kBeam;
      beam.k = k;
      beam.max_len = kMaxLen;
      const auto results = beam_search(model, encoded, beam);
      for (const auto& r : results) {
        score_err = std::max(score_err,
                             std::abs(r.log_prob - recomputed_log_prob(
                                                       model, encoded, r.token_ids)));
      }
      if (k == 1 && (results.size() != 1 ||
                     results[0].token_ids != greedy_decode(model, encoded, kMaxLen))) {
        greedy_ok = false;
      }
      DecodeConfig cold = beam;
      cold.mode = DecodeMode::kTemperatureBeam;
      cold.temperature = 1e-6;
      for (std::uint64_t s = 1; s <= 3; ++s) {
        cold.seed = s;
        const auto sampled = temperature_beam_search(model, encoded, cold);
        if (sampled.size() != results.size()) {
          cold_ok = false;
          continue;
        }
        for (std::size_t i = 0; i < sampled.size(); ++i) {
          if (sampled[i].token_ids != results[i].token_ids) cold_ok = false;
        }
      }
      if (exhaustive_best(model, encoded, kMaxLen) < results.front().log_prob - 1e-12) {
        exhaustive_ok = false;
      }
    }
  }
  std::ostringstream os;
  os << cases << " cases: score err " << score_err << ", k=1 greedy "
     << (greedy_ok ? "equal" : "DIFFERENT") << ", T=1e-6 "
     << (cold_ok ? "equal" : "DIFFERENT") << ", exhaustive >= beam "
     << (exhaustive_ok ? "yes" : "NO");
  return {score_err < 1e-6 && greedy_ok && cold_ok && exhaustive_ok, os.str()};
}

// ---- 5: preprocessing conformance

Outcome preprocessing_conformance() {
  const auto raw = read_raw_examples(std::filesystem::path(MEMECAP_TEST_DATA) /
                                     "preprocess_fixture.tsv");
  const PreprocessResult r = preprocess(raw, 3);
  // Hand count over the fixture: the ten animal words in lines 21-29 occur
  // twice each, "yak" and "zebu" three times, "kiwi lynx mole" once.
  const std::set<std::size_t> removed_want = {22, 23, 25, 30};
  const std::map<std::size_t, std::size_t> unks_want = {
      {21, 2}, {24, 2}, {26, 2}, {27, 1}, {28, 2}, {29, 2}};
  std::set<std::size_t> kept;
  for (const auto& k : r.kept) kept.insert(k.line);
  bool ok = raw.size() == 30 && r.stats.total == 30 && r.stats.kept == 26 &&
            r.stats.removed == 4 && r.stats.vocab_size == 10;
  for (std::size_t line = 1; line <= 30; ++line) {
    ok = ok && (kept.count(line) == 1) == (removed_want.count(line) == 0);
  }
  for (std::size_t i = 0; i < r.kept.size(); ++i) {
    const auto it = unks_want.find(r.kept[i].line);
    const std::size_t want = it == unks_want.end() ? 0 : it->second;
    ok = ok && r.dataset.examples[i].unk_count == want;
  }
  const Vocabulary& v = r.dataset.vocab;
  for (const char* w : {"yak", "zebu", "the", "funny"}) ok = ok && v.find(w).has_value();
  for (const char* w : {"ant", "bee", "cow", "doe", "eel", "fox", "gnu", "hen",
                        "ibis", "jay", "kiwi"}) {
    ok = ok && !v.find(w).has_value();
  }
  std::ostringstream os;
  os << "kept " << r.stats.kept << "/" << r.stats.total << ", removed lines {";
  bool first = true;
  for (std::size_t line = 1; line <= 30; ++line) {
    if (kept.count(line) == 0) {
      os << (first ? "" : ",") << line;
      first = false;
    }
  }
  os << "}, vocab " << r.stats.vocab_size;
  return {ok, os.str()};
}

// ---- 6: perplexity closed forms

Outcome perplexity_closed_forms() {
  // Zero output projection: every next-token distribution is uniform.
  TinySpec spec;
  spec.vocab = 20;
  auto uniform = tiny_model<double>(spec);
  uniform.params.output.fill(0.0);
  ImageTable<double> images{{"a", random_image<double>(spec.image, 1)},
                            {"b", random_image<double>(spec.image, 2)}};
  const std::vector<MemeExample> set = {example_of("a", {4}, {5, 6, 7}),
                                        example_of("b", {8, 9}, {10}),
                                        example_of("a", {}, {11, 12, 13, 14, 15})};
  const double pp_uniform = perplexity(uniform, set, images).perplexity;

  // Two-way tie between END and UNK, START pushed to probability ~e^-600.
  TinySpec half_spec;
  half_spec.variant = EncoderVariant::kImageOnly;
  half_spec.vocab = 3;
  half_spec.hidden = 3;
  half_spec.embed = 3;
  half_spec.image = 4;
  auto half = tiny_model<double>(half_spec);
  auto& p = half.params;
  p.encoder_proj.fill(0);
  p.encoder_bias.fill(0);
  p.embedding.fill(1.0);
  auto& w = p.decoder[0];
  for (auto* m : {&w.ix, &w.im, &w.fx, &w.fm, &w.ox, &w.om, &w.cm}) m->fill(0);
  w.cx.fill(0.5);  // m stays strictly positive
  p.output.fill(0.0);
  for (double& x : p.output.row(kStartId)) x = -1000.0;
  ImageTable<double> one{{"a", Vector<double>(4)}};
  const std::vector<MemeExample> half_set = {example_of("a", {}, {kUnkId})};
  const double pp_half = perplexity(half, half_set, one).perplexity;

  std::ostringstream os;
  os << "uniform V=20 -> " << pp_uniform << ", P=0.5 -> " << pp_half;
  return {std::abs(pp_uniform - 20.0) / 20.0 < 1e-6 &&
              std::abs(pp_half - 2.0) / 2.0 < 1e-6,
          os.str()};
}

// ---- 7: copy detector

// Multiset bigram Jaccard written out independently of the library.
double oracle_jaccard(const std::vector<std::string>& a,
                      const std::vector<std::string>& b) {
  std::map<std::string, int> ca, cb;
  for (std::size_t i = 1; i < a.size(); ++i) ++ca[a[i - 1] + " " + a[i]];
  for (std::size_t i = 1; i < b.size(); ++i) ++cb[b[i - 1] + " " + b[i]];
  int inter = 0, uni = 0;
  std::set<std::string> keys;
  for (auto& [k, v] : ca) keys.insert(k);
  for (auto& [k, v] : cb) keys.insert(k);
  for (const auto& k : keys) {
    inter += std::min(ca[k], cb[k]);
    uni += std::max(ca[k], cb[k]);
  }
  return static_cast<double>(inter) / uni;
}

Outcome copy_detector() {
  std::vector<std::string> index_captions;
  std::vector<std::string> long_words;
  for (int i = 0; i < 20; ++i) long_words.push_back("w" + std::to_string(i));
  index_captions.push_back(detokenize(long_words));
  for (int i = 1; i < 20; ++i) {
    index_captions.push_back("caption " + std::to_string(i) + " about cat " +
                             std::to_string(i * 7) + " things");
  }
  const DupIndex index = DupIndex::build_from_text(index_captions);

  std::vector<std::string> disjoint;
  for (int i = 0; i < 20; ++i) {
    disjoint.push_back("fresh words " + std::to_string(100 + i) + " nowhere seen");
  }
  const double exact_pct = percent_in_data(index_captions, index, 0.8);
  const double disjoint_pct = percent_in_data(disjoint, index, 0.8);

  std::vector<std::string> near(long_words.begin(), long_words.begin() + 18);
  near.push_back("novel");
  const double want = oracle_jaccard(long_words, near);
  const CopyResult r = copy_check(std::span<const std::string>(near), index, 0.8);
  std::ostringstream os;
  os << "exact " << exact_pct << "%, disjoint " << disjoint_pct
     << "%, near-dup jaccard " << r.similarity << " (oracle " << want << ") "
     << (r.kind == CopyKind::kNear ? "Near" : "not Near");
  return {exact_pct == 100.0 && disjoint_pct == 0.0 &&
              std::abs(want - 0.85) < 1e-12 &&
              std::abs(r.similarity - want) < 1e-12 && r.kind == CopyKind::kNear,
          os.str()};
}

// ---- 8: determinism through the command line

int run(const std::string& command) {
  return std::system((command + " 2>/dev/null >/dev/null").c_str());
}

struct PipelineFiles {
  std::string checkpoint;
  std::string captions;
  bool ok = false;
};

PipelineFiles pipeline(const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "img");
  const SyntheticCorpus corpus = synthetic_corpus(3, 6);
  std::string raw;
  for (const auto& row : corpus.rows) {
    raw += row.image_id + '\t' + row.label + '\t' + row.caption + '\n';
  }
  write_file(dir / "raw.tsv", raw);
  std::string images;
  for (const auto& id : corpus.image_ids) {
    write_file(dir / "img" / (id + ".jpg"), "not really a jpeg: " + id);
    images += " " + (dir / "img" / (id + ".jpg")).string();
  }
  const std::string cli = MEMECAP_CLI;
  const std::string d = dir.string();
  PipelineFiles out;
  out.ok =
      run(cli + " pseudo-embed --output " + d + "/images.bin" + images) == 0 &&
      run(cli + " preprocess --input " + d + "/raw.tsv --out-dir " + d +
          "/pre --min-count 1") == 0 &&
      run(cli + " train --data " + d + "/pre/processed.tsv --vocab " + d +
          "/pre/vocab.tsv --images " + d + "/images.bin --checkpoint " + d +
          "/model.ckpt --variant 3 --layers 2 --hidden 8 --embed-dim 8 "
          "--epochs 3 --batch-size 4 --threads 2 --seed 42 --optimizer "
          "momentum --mu 0.9") == 0 &&
      run(cli + " generate --checkpoint " + d + "/model.ckpt --images " + d +
          "/images.bin --image-id template1 --label 'dogs meme' --k 3 "
          "--temperature 0.7 --seed 42 --output " + d + "/captions.tsv") == 0;
  if (out.ok) {
    out.checkpoint = read_file(dir / "model.ckpt");
    out.captions = read_file(dir / "captions.tsv");
  }
  return out;
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "memecap_acceptance";
  const PipelineFiles a = pipeline(base / "run_a");
  const PipelineFiles b = pipeline(base / "run_b");
  std::filesystem::remove_all(base);
  if (!a.ok || !b.ok) return {false, "pipeline command failed"};
  const bool same = a.checkpoint == b.checkpoint && a.captions == b.captions;
  std::ostringstream os;
  os << "checkpoint " << a.checkpoint.size() << " bytes "
     << (a.checkpoint == b.checkpoint ? "identical" : "DIFFERENT")
     << ", captions TSV " << (a.captions == b.captions ? "identical" : "DIFFERENT");
  return {same && !a.captions.empty(), os.str()};
}

// ---- 9: attention sanity

template <typename T>
double attention_sum_error(Rng& rng, int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t h = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(10);
    Matrix<T> score(h, h);
    fill_uniform(score.span(), rng, 3.0);
    Vector<T> q(h);
    fill_uniform(q.span(), rng, 3.0);
    AttentionMemory<T> mem;
    for (std::size_t k = 0; k < n; ++k) {
      Vector<T> key(h);
      fill_uniform(key.span(), rng, 3.0);
      mem.keys.push_back(key);
    }
    const auto w = attention_weights(q, mem, score);
    double sum = 0.0;
    for (T x : w) {
      if (!(x >= T(0))) return INFINITY;
      sum += static_cast<double>(x);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

Outcome attention_sanity() {
  Rng rng(99);
  Matrix<double> score(4, 4);
  fill_uniform(score.span(), rng, 5.0);
  Vector<double> h(4);
  fill_uniform(h.span(), rng, 5.0);
  AttentionMemory<double> single;
  single.keys.push_back(Vector<double>{3.0, -1.0, 2.0, 0.5});
  const auto one = attention_weights(h, single, score);
  const bool single_ok = one.size() == 1 && one[0] == 1.0;

  AttentionMemory<double> many;
  for (int k = 0; k < 7; ++k) {
    Vector<double> key(4);
    fill_uniform(key.span(), rng, 5.0);
    many.keys.push_back(key);
  }
  const auto flat = attention_weights(h, many, Matrix<double>(4, 4));
  double flat_err = 0.0;
  for (double x : flat) flat_err = std::max(flat_err, std::abs(x - 1.0 / 7.0));

  const double sum_err = std::max(attention_sum_error<double>(rng, 1000),
                                  attention_sum_error<float>(rng, 1000));
  std::ostringstream os;
  os << "single key weight " << one.at(0) << ", zero-score max dev " << flat_err
     << ", max |sum-1| " << sum_err << " over 2000 random cases";
  return {single_ok && flat_err < 1e-15 && sum_err < 1e-6, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"memorization", memorization},
      {"temperature exactness", temperature_exactness},
      {"decoding oracles", decoding_oracles},
      {"preprocessing conformance", preprocessing_conformance},
      {"perplexity closed forms", perplexity_closed_forms},
      {"copy detector", copy_detector},
      {"determinism", determinism},
      {"attention sanity", attention_sanity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << (i + 1)
              << ": " << criteria[i].first << " (" << outcome.detail << ")"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
