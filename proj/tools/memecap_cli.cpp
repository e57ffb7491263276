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

// memecap command line front end. Talks to the library only through the C
// API in memecap/memecap.h.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memecap/memecap.h"

namespace {

// 0 ok, 1 validation, 2 i/o, 3 numeric.
int exit_code(memecap_status status) {
  switch (status) {
    case MEMECAP_OK:
      return 0;
    case MEMECAP_ERR_IO:
    case MEMECAP_ERR_FORMAT:
      return 2;
    case MEMECAP_ERR_NUMERIC:
      return 3;
    default:
      return 1;
  }
}

struct Failure {
  memecap_status status;
};

void check(memecap_status status) {
  if (status == MEMECAP_OK) return;
  std::cerr << "error: " << memecap_last_error() << '\n';
  throw Failure{status};
}

const char* c_str_or_null(const std::string& s) {
  return s.empty() ? nullptr : s.c_str();
}

// Shortest text that reads back to the same double.
std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Effective values, printed as a config file that reproduces the run.
class Echo {
 public:
  explicit Echo(std::string command) : command_(std::move(command)) {}
  template <typename V>
  void add(const std::string& key, const V& value) {
    std::ostringstream os;
    if constexpr (std::is_floating_point_v<V>) {
      os << format_double(value);
    } else {
      os << value;
    }
    lines_.push_back(key + " = " + os.str());
  }
  void print() const {
    std::cerr << "# memecap " << command_ << " effective configuration\n";
    for (const auto& line : lines_) std::cerr << line << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> lines_;
};

// Rewrites `--config FILE` into plain flags placed before the user's own
// flags; options take the last value given, so the command line wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  std::vector<std::string> rest;
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) {
    throw CLI::FileError::Missing(*path);
  }
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = item.inputs.empty() ? "true" : item.inputs.front();
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out{args.front()};
  // The subcommand name stays first so injected flags bind to it.
  std::size_t first = 0;
  if (!rest.empty() && rest.front().rfind("-", 0) != 0) {
    out.push_back(rest.front());
    first = 1;
  }
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<long>(first), rest.end());
  return out;
}

struct DecodeFlags {
  std::string mode = "temperature";
  std::size_t k = 0;
  double temperature = 0.0;
  std::size_t top_m = 0;
  std::size_t max_len = 0;
  std::uint64_t seed = 0;
  bool length_normalize = false;

  void attach(CLI::App* app) {
    memecap_decode_options d;
    memecap_decode_options_init(&d);
    k = d.k;
    temperature = d.temperature;
    top_m = d.top_m;
    max_len = d.max_len;
    seed = d.seed;
    app->add_option("--mode", mode, "greedy, beam or temperature")
        ->check(CLI::IsMember({"greedy", "beam", "temperature"}))
        ->capture_default_str();
    app->add_option("--k", k, "captions to return")->capture_default_str();
    app->add_option("--temperature", temperature, "sampling temperature T > 0")
        ->capture_default_str();
    app->add_option("--top-m", top_m, "candidate pool per expansion")
        ->capture_default_str();
    app->add_option("--max-len", max_len, "generated tokens, END included")
        ->capture_default_str();
    app->add_option("--seed", seed, "sampling seed")->capture_default_str();
    app->add_flag("--length-normalize", length_normalize,
                  "rank finished captions by mean log-prob");
  }

  memecap_decode_options resolve(Echo& echo) const {
    memecap_decode_options d;
    memecap_decode_options_init(&d);
    d.mode = mode == "greedy" ? MEMECAP_DECODE_GREEDY
             : mode == "beam" ? MEMECAP_DECODE_BEAM
                              : MEMECAP_DECODE_TEMPERATURE_BEAM;
    d.k = k;
    d.temperature = temperature;
    d.top_m = top_m;
    d.max_len = max_len;
    d.seed = seed;
    d.length_normalize = length_normalize ? 1 : 0;
    echo.add("mode", mode);
    echo.add("k", k);
    echo.add("temperature", temperature);
    echo.add("top_m", top_m);
    echo.add("max_len", max_len);
    echo.add("seed", seed);
    echo.add("length_normalize", length_normalize ? "true" : "false");
    return d;
  }
};

// ---- preprocess

struct PreprocessCmd {
  std::string input, out_dir;
  int min_count = 3;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "raw TSV: image_id, label, caption")
        ->required();
    app->add_option("--out-dir", out_dir,
                    "directory for processed.tsv, vocab.tsv, stats.tsv")
        ->required();
    app->add_option("--min-count", min_count,
                    "words seen fewer times become <unk>")
        ->capture_default_str();
  }

  void run() const {
    Echo echo("preprocess");
    echo.add("input", input);
    echo.add("out_dir", out_dir);
    echo.add("min_count", min_count);
    echo.print();
    memecap_preprocess_stats stats{};
    check(memecap_preprocess(input.c_str(), out_dir.c_str(), min_count, &stats));
    std::cout << "total\t" << stats.total << "\nkept\t" << stats.kept
              << "\nremoved\t" << stats.removed << "\nvocab_size\t"
              << stats.vocab_size << '\n';
  }
};

// ---- train

struct TrainCmd {
  std::string data, vocab, images, checkpoint, glove, eval, metrics;
  std::string optimizer = "sgd";
  int variant = 0, precision = 0, lr_decay_every = 0, epochs = 0;
  std::size_t layers = 0, hidden = 0, embed_dim = 0, batch_size = 0,
              threads = 0;
  double mu = 0, lr = 0, lr_decay = 0, clip_norm = 0;
  std::uint64_t seed = 0;
  bool freeze = false;
  CLI::App* app = nullptr;

  void attach(CLI::App* a) {
    app = a;
    app->add_option("--data", data, "processed training TSV")->required();
    app->add_option("--vocab", vocab, "vocabulary TSV")->required();
    app->add_option("--images", images, "image embedding file")->required();
    app->add_option("--checkpoint", checkpoint, "output checkpoint")->required();
    app->add_option("--glove", glove, "GloVe text file (optional)");
    app->add_option("--eval", eval, "eval TSV for per-epoch perplexity");
    app->add_option("--metrics", metrics, "per-epoch metrics TSV");
    app->add_option("--optimizer", optimizer, "sgd or momentum")
        ->check(CLI::IsMember({"sgd", "momentum"}))
        ->capture_default_str();
    // Defaults come from the library; lr also depends on the optimizer.
    memecap_train_options sgd, mom;
    memecap_train_options_init(&sgd, MEMECAP_OPTIMIZER_SGD);
    memecap_train_options_init(&mom, MEMECAP_OPTIMIZER_MOMENTUM);
    auto dflt = [](auto v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
    app->add_option("--variant", variant, "encoder variant 1, 2 or 3")
        ->default_str(dflt(static_cast<int>(sgd.variant)));
    app->add_option("--layers", layers, "decoder LSTM layers")
        ->default_str(dflt(sgd.layers));
    app->add_option("--hidden", hidden, "LSTM width")->default_str(dflt(sgd.hidden));
    app->add_option("--embed-dim", embed_dim, "word embedding width")
        ->default_str(dflt(sgd.embed_dim));
    app->add_option("--precision", precision, "32 or 64")
        ->default_str(dflt(sgd.precision));
    app->add_option("--mu", mu, "momentum coefficient")
        ->default_str(dflt(mom.momentum));
    app->add_option("--lr", lr, "learning rate")
        ->default_str(dflt(sgd.learning_rate) + " sgd, " +
                      dflt(mom.learning_rate) + " momentum");
    app->add_option("--lr-decay", lr_decay, "decay factor")
        ->default_str(dflt(sgd.lr_decay_factor));
    app->add_option("--lr-decay-every", lr_decay_every, "epochs per decay")
        ->default_str(dflt(sgd.lr_decay_every));
    app->add_option("--batch-size", batch_size, "examples per update")
        ->default_str(dflt(sgd.batch_size));
    app->add_option("--epochs", epochs, "training epochs")
        ->default_str(dflt(sgd.epochs));
    app->add_option("--seed", seed, "seed for init and shuffling")
        ->default_str(dflt(sgd.seed));
    app->add_option("--clip-norm", clip_norm, "global gradient norm cap")
        ->default_str(dflt(sgd.clip_norm));
    app->add_option("--threads", threads, "worker threads")
        ->default_str(dflt(sgd.threads) + " (cores)");
    app->add_flag("--freeze-embeddings", freeze, "keep word vectors fixed");
  }

  bool given(const char* name) const { return app->count(name) > 0; }

  void run() const {
    memecap_train_options o;
    memecap_train_options_init(&o, optimizer == "momentum"
                                       ? MEMECAP_OPTIMIZER_MOMENTUM
                                       : MEMECAP_OPTIMIZER_SGD);
    o.data_path = data.c_str();
    o.vocab_path = vocab.c_str();
    o.images_path = images.c_str();
    o.checkpoint_path = checkpoint.c_str();
    o.glove_path = c_str_or_null(glove);
    o.eval_path = c_str_or_null(eval);
    o.metrics_path = c_str_or_null(metrics);
    if (given("--variant")) o.variant = static_cast<memecap_variant>(variant);
    if (given("--layers")) o.layers = layers;
    if (given("--hidden")) o.hidden = hidden;
    if (given("--embed-dim")) o.embed_dim = embed_dim;
    if (given("--precision")) o.precision = precision;
    if (given("--mu")) o.momentum = mu;
    if (given("--lr")) o.learning_rate = lr;
    if (given("--lr-decay")) o.lr_decay_factor = lr_decay;
    if (given("--lr-decay-every")) o.lr_decay_every = lr_decay_every;
    if (given("--batch-size")) o.batch_size = batch_size;
    if (given("--epochs")) o.epochs = epochs;
    if (given("--seed")) o.seed = seed;
    if (given("--clip-norm")) o.clip_norm = clip_norm;
    if (given("--threads")) o.threads = threads;
    o.freeze_embeddings = freeze ? 1 : 0;

    Echo echo("train");
    echo.add("data", data);
    echo.add("vocab", vocab);
    echo.add("images", images);
    echo.add("checkpoint", checkpoint);
    echo.add("glove", glove);
    echo.add("eval", eval);
    echo.add("metrics", metrics);
    echo.add("variant", static_cast<int>(o.variant));
    echo.add("layers", o.layers);
    echo.add("hidden", o.hidden);
    echo.add("embed_dim", o.embed_dim);
    echo.add("precision", o.precision);
    echo.add("optimizer", optimizer);
    echo.add("mu", o.momentum);
    echo.add("lr", o.learning_rate);
    echo.add("lr_decay", o.lr_decay_factor);
    echo.add("lr_decay_every", o.lr_decay_every);
    echo.add("batch_size", o.batch_size);
    echo.add("epochs", o.epochs);
    echo.add("seed", o.seed);
    echo.add("clip_norm", o.clip_norm);
    echo.add("freeze_embeddings", freeze ? "true" : "false");
    echo.add("threads", o.threads);
    echo.print();

    check(memecap_train_options_validate(&o));
    check(memecap_train(
        &o,
        [](int epoch, double loss, double pp, double rate, void*) {
          std::cerr << "epoch " << epoch << "  loss " << format_double(loss)
                    << "  eval_pp " << format_double(pp) << "  lr "
                    << format_double(rate) << '\n';
        },
        nullptr));
    std::cerr << "wrote " << checkpoint << '\n';
  }
};

// ---- generate

struct ModelHandle {
  memecap_model* model = nullptr;
  explicit ModelHandle(const std::string& path) {
    check(memecap_model_load(path.c_str(), &model));
  }
  ~ModelHandle() { memecap_model_free(model); }
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
};

struct GenerateCmd {
  std::string checkpoint, images, image_id, image_file, label, output;
  DecodeFlags decode;
  CLI::App* app = nullptr;

  void attach(CLI::App* a) {
    app = a;
    app->add_option("--checkpoint", checkpoint, "trained checkpoint")
        ->required();
    auto* store = app->add_option("--images", images, "image embedding file");
    auto* id = app->add_option("--image-id", image_id, "id inside --images");
    auto* file = app->add_option("--image-file", image_file,
                                 "raw image, pseudo-embedded from its bytes");
    id->needs(store);
    store->needs(id);
    file->excludes(id);
    file->excludes(store);
    app->add_option("--label", label, "template label (variants 2 and 3)");
    app->add_option("--output", output, "write TSV here instead of stdout");
    decode.attach(app);
  }

  std::vector<float> load_image() const {
    std::vector<float> v(memecap_image_dim());
    if (!image_file.empty()) {
      check(memecap_pseudo_embed_file(image_file.c_str(), v.data(), v.size()));
      return v;
    }
    if (image_id.empty()) {
      std::cerr << "error: give --image-file or --images with --image-id\n";
      throw Failure{MEMECAP_ERR_VALIDATION};
    }
    memecap_images* store = nullptr;
    check(memecap_images_load(images.c_str(), &store));
    const memecap_status s =
        memecap_images_get(store, image_id.c_str(), v.data(), v.size());
    memecap_images_free(store);
    check(s);
    return v;
  }

  void run() const {
    Echo echo("generate");
    echo.add("checkpoint", checkpoint);
    echo.add("images", images);
    echo.add("image_id", image_id);
    echo.add("image_file", image_file);
    echo.add("label", label);
    echo.add("output", output);
    const memecap_decode_options d = decode.resolve(echo);
    echo.print();

    ModelHandle model(checkpoint);
    const std::vector<float> image = load_image();
    memecap_captions* captions = nullptr;
    check(memecap_generate(model.model, image.data(), image.size(),
                           app->count("--label") ? label.c_str() : nullptr, &d,
                           &captions));
    std::ostringstream tsv;
    tsv << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < memecap_captions_count(captions); ++i) {
      tsv << (i + 1) << '\t' << memecap_captions_log_prob(captions, i) << '\t'
          << memecap_captions_text(captions, i) << '\n';
    }
    for (std::size_t i = 0; i < memecap_captions_warning_count(captions); ++i) {
      std::cerr << "warning: " << memecap_captions_warning(captions, i) << '\n';
    }
    memecap_captions_free(captions);
    if (output.empty()) {
      std::cout << tsv.str();
    } else {
      std::ofstream out(output, std::ios::binary | std::ios::trunc);
      out << tsv.str();
      if (!out) {
        std::cerr << "error: cannot write " << output << '\n';
        throw Failure{MEMECAP_ERR_IO};
      }
    }
  }
};

// ---- evaluate

struct EvaluateCmd {
  std::string checkpoint, eval, train, images, vocab;
  double threshold = 0.0;
  DecodeFlags decode;

  void attach(CLI::App* app) {
    memecap_eval_options defaults;
    memecap_eval_options_init(&defaults);
    threshold = defaults.near_dup_threshold;
    app->add_option("--checkpoint", checkpoint, "trained checkpoint")
        ->required();
    app->add_option("--eval", eval, "eval TSV")->required();
    app->add_option("--train", train, "training TSV for copy detection")
        ->required();
    app->add_option("--images", images, "image embedding file")->required();
    app->add_option("--vocab", vocab, "vocabulary TSV; must match checkpoint");
    app->add_option("--near-dup-threshold", threshold,
                    "bigram Jaccard at or above which a caption is a near copy")
        ->capture_default_str();
    decode.attach(app);
  }

  void run() const {
    Echo echo("evaluate");
    echo.add("checkpoint", checkpoint);
    echo.add("eval", eval);
    echo.add("train", train);
    echo.add("images", images);
    echo.add("vocab", vocab);
    echo.add("near_dup_threshold", threshold);
    memecap_eval_options o;
    memecap_eval_options_init(&o);
    o.eval_path = eval.c_str();
    o.train_path = train.c_str();
    o.images_path = images.c_str();
    o.vocab_path = c_str_or_null(vocab);
    o.near_dup_threshold = threshold;
    o.decode = decode.resolve(echo);
    echo.print();

    ModelHandle model(checkpoint);
    memecap_eval_report r{};
    check(memecap_evaluate(model.model, &o, &r));
    std::cout << "perplexity\t" << format_double(r.perplexity)
              << "\npercent_in_data\t" << format_double(r.percent_in_data)
              << "\nexamples\t" << r.examples << "\ngenerated\t" << r.generated
              << "\nexact_copies\t" << r.exact_copies << "\nnear_copies\t"
              << r.near_copies << "\nnear_dup_threshold\t"
              << format_double(r.near_dup_threshold) << '\n';
  }
};

// ---- pseudo-embed

struct PseudoEmbedCmd {
  std::vector<std::string> files;
  std::string output;
  bool append = false;

  void attach(CLI::App* app) {
    app->add_option("files", files, "image files; each id is the file stem")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--output", output, "image embedding file to write")
        ->required();
    app->add_flag("--append", append, "add to an existing --output file");
  }

  void run() const {
    Echo echo("pseudo-embed");
    echo.add("output", output);
    echo.add("append", append ? "true" : "false");
    echo.print();
    memecap_images* store = nullptr;
    if (append && std::filesystem::exists(output)) {
      check(memecap_images_load(output.c_str(), &store));
    } else {
      check(memecap_images_create(&store));
    }
    memecap_status status = MEMECAP_OK;
    std::vector<float> v(memecap_image_dim());
    for (const auto& file : files) {
      const std::string id = std::filesystem::path(file).stem().string();
      status = memecap_pseudo_embed_file(file.c_str(), v.data(), v.size());
      if (status == MEMECAP_OK) {
        status = memecap_images_put(store, id.c_str(), v.data(), v.size());
      }
      if (status != MEMECAP_OK) break;
      std::cout << id << '\n';
    }
    if (status == MEMECAP_OK) status = memecap_images_save(store, output.c_str());
    memecap_images_free(store);
    check(status);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meme caption generation: preprocess, train, generate, evaluate."};
  app.require_subcommand(1);
  app.set_version_flag("--version", memecap_version());
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  PreprocessCmd preprocess;
  TrainCmd train;
  GenerateCmd generate;
  EvaluateCmd evaluate;
  PseudoEmbedCmd pseudo;
  const std::vector<std::pair<CLI::App*, std::function<void()>>> commands = {
      {app.add_subcommand("preprocess", "normalize a raw TSV and build a vocabulary"),
       [&] { preprocess.run(); }},
      {app.add_subcommand("train", "train a caption model"), [&] { train.run(); }},
      {app.add_subcommand("generate", "caption one image"), [&] { generate.run(); }},
      {app.add_subcommand("evaluate", "perplexity and copy rate on an eval set"),
       [&] { evaluate.run(); }},
      {app.add_subcommand("pseudo-embed", "hash image files into an embedding file"),
       [&] { pseudo.run(); }},
  };
  preprocess.attach(commands[0].first);
  train.attach(commands[1].first);
  generate.attach(commands[2].first);
  evaluate.attach(commands[3].first);
  pseudo.attach(commands[4].first);
  for (const auto& [sub, run] : commands) {
    sub->add_option("--config", "key = value file; flags given here override it")
        ->type_name("FILE");
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return 2;
  } catch (const CLI::Error& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) run();
    }
  } catch (const Failure& f) {
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
