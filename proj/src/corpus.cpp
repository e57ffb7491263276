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

#include "corpus.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "error.hpp"
#include "io_util.hpp"

namespace memecap {
namespace {

constexpr std::string_view kPunctuation = ".,!?'\";:()-";

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_punctuation(char c) {
  return kPunctuation.find(c) != std::string_view::npos;
}

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string line_context(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    const auto uc = static_cast<unsigned char>(c);
    if (is_word_byte(uc)) {
      word.push_back(lower(c));
      continue;
    }
    // An apostrophe between two word characters stays inside the word.
    if (c == '\'' && !word.empty() && i + 1 < raw.size() &&
        is_word_byte(static_cast<unsigned char>(raw[i + 1]))) {
      word.push_back(c);
      continue;
    }
    flush();
    if (is_punctuation(c)) tokens.emplace_back(1, c);
  }
  flush();
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  entries_ = {{std::string(kStartToken), 0},
              {std::string(kEndToken), 0},
              {std::string(kUnkToken), 0}};
  index();
}

void Vocabulary::index() {
  ids_.clear();
  ids_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    ids_.emplace(entries_[i].token, static_cast<TokenId>(i));
  }
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& captions, int min_count) {
  if (min_count < 1) {
    fail(ErrorCode::kValidation,
         "min_count must be >= 1, got " + std::to_string(min_count));
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& caption : captions) {
    for (const auto& token : caption) ++counts[token];
  }
  std::vector<Entry> kept;
  for (const auto& [token, count] : counts) {
    if (count >= static_cast<std::uint64_t>(min_count)) {
      kept.push_back({token, count});
    }
  }
  // counts is already lexicographic, so a stable sort on count alone keeps
  // lexicographic order among ties.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Entry& a, const Entry& b) { return a.count > b.count; });

  Vocabulary vocab;
  for (auto& entry : kept) vocab.entries_.push_back(std::move(entry));
  vocab.index();
  return vocab;
}

Vocabulary Vocabulary::from_entries(std::vector<Entry> entries) {
  const std::string_view specials[] = {kStartToken, kEndToken, kUnkToken};
  if (entries.size() < kNumSpecialTokens) {
    fail(ErrorCode::kFormat, "vocabulary is missing the special tokens");
  }
  for (std::size_t i = 0; i < kNumSpecialTokens; ++i) {
    if (entries[i].token != specials[i]) {
      fail(ErrorCode::kFormat, "vocabulary entry " + std::to_string(i) +
                                   " must be " + std::string(specials[i]) +
                                   ", found '" + entries[i].token + "'");
    }
  }
  Vocabulary vocab;
  vocab.entries_ = std::move(entries);
  vocab.index();
  if (vocab.ids_.size() != vocab.entries_.size()) {
    for (std::size_t i = 0; i < vocab.entries_.size(); ++i) {
      if (vocab.ids_.at(vocab.entries_[i].token) != i) {
        fail(ErrorCode::kFormat, "duplicate token '" + vocab.entries_[i].token +
                                     "' at entry " + std::to_string(i));
      }
    }
  }
  return vocab;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& entry : entries_) {
    out += entry.token;
    out.push_back('\t');
    out += std::to_string(entry.count);
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text,
                                 const std::string& source) {
  std::vector<Entry> entries;
  std::map<std::string, std::size_t, std::less<>> seen;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 2 || fields[0].empty()) {
      fail(ErrorCode::kFormat, line_context(source, line_no) +
                                   ": expected 'token<TAB>count'");
    }
    std::uint64_t count = 0;
    const auto [ptr, ec] = std::from_chars(
        fields[1].data(), fields[1].data() + fields[1].size(), count);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
      fail(ErrorCode::kFormat, line_context(source, line_no) +
                                   ": bad count '" + std::string(fields[1]) +
                                   "'");
    }
    const auto [it, inserted] = seen.emplace(std::string(fields[0]), line_no);
    if (!inserted) {
      fail(ErrorCode::kFormat, line_context(source, line_no) +
                                   ": duplicate token '" +
                                   std::string(fields[0]) + "' (first on line " +
                                   std::to_string(it->second) + ")");
    }
    entries.push_back({std::string(fields[0]), count});
  }
  return from_entries(std::move(entries));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  write_file(path, to_text());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return from_text(read_file(path), path.string());
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_or_unk(std::string_view token) const {
  return find(token).value_or(kUnkId);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= entries_.size()) {
    fail(ErrorCode::kOutOfRange, "token id " + std::to_string(id) +
                                     " outside vocabulary of size " +
                                     std::to_string(entries_.size()));
  }
  return entries_[id].token;
}

std::uint64_t Vocabulary::count(TokenId id) const {
  token(id);  // range check
  return entries_[id].count;
}

EncodedCaption encode_caption(std::span<const std::string> tokens,
                              const Vocabulary& vocab) {
  EncodedCaption out;
  out.ids.reserve(tokens.size() + 2);
  out.ids.push_back(kStartId);
  for (const auto& token : tokens) {
    const TokenId id = vocab.id_or_unk(token);
    if (id == kUnkId) ++out.unk_count;
    out.ids.push_back(id);
  }
  out.ids.push_back(kEndId);
  return out;
}

std::vector<TokenId> encode_label(std::span<const std::string> tokens,
                                  const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(vocab.id_or_unk(token));
  return ids;
}

std::vector<std::string> decode_ids(std::span<const TokenId> ids,
                                    const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(vocab.token(id));
  return tokens;
}

std::vector<RawExample> parse_raw_examples(std::string_view text,
                                           const std::string& source) {
  std::vector<RawExample> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 3) {
      fail(ErrorCode::kFormat,
           line_context(source, i + 1) + ": expected 3 tab-separated fields "
                                         "(image_id, label, caption), found " +
               std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      fail(ErrorCode::kFormat, line_context(source, i + 1) + ": empty image id");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]),
                   std::string(fields[2]), i + 1});
  }
  return out;
}

std::vector<RawExample> read_raw_examples(const std::filesystem::path& path) {
  return parse_raw_examples(read_file(path), path.string());
}

std::vector<MemeExample> filter_dataset(std::vector<MemeExample> examples) {
  std::erase_if(examples, [](const MemeExample& e) {
    return e.unk_count > kMaxUnksPerCaption;
  });
  return examples;
}

MemeExample encode_example(const RawExample& raw, const Vocabulary& vocab) {
  const auto label_tokens = tokenize(raw.label);
  const auto caption_tokens = tokenize(raw.caption);
  EncodedCaption caption = encode_caption(caption_tokens, vocab);
  return {raw.image_id, encode_label(label_tokens, vocab),
          std::move(caption.ids), caption.unk_count};
}

PreprocessResult preprocess(const std::vector<RawExample>& raw,
                            int min_count) {
  std::vector<std::vector<std::string>> captions;
  captions.reserve(raw.size());
  for (const auto& example : raw) captions.push_back(tokenize(example.caption));

  PreprocessResult result;
  result.dataset.vocab = Vocabulary::build(captions, min_count);
  const Vocabulary& vocab = result.dataset.vocab;

  for (std::size_t i = 0; i < raw.size(); ++i) {
    MemeExample example = encode_example(raw[i], vocab);
    if (example.unk_count > kMaxUnksPerCaption) continue;
    result.dataset.examples.push_back(std::move(example));
    result.kept.push_back({raw[i].image_id, detokenize(tokenize(raw[i].label)),
                           detokenize(captions[i]), raw[i].line});
  }
  result.stats.total = raw.size();
  result.stats.kept = result.dataset.examples.size();
  result.stats.removed = raw.size() - result.stats.kept;
  result.stats.vocab_size = vocab.size();
  return result;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const Vocabulary& vocab) {
  Dataset dataset;
  dataset.vocab = vocab;
  for (const auto& raw : read_raw_examples(path)) {
    dataset.examples.push_back(encode_example(raw, vocab));
  }
  return dataset;
}

void write_examples(const std::vector<RawExample>& raw,
                    const std::filesystem::path& path) {
  std::string out;
  for (const auto& example : raw) {
    out += example.image_id + '\t' + example.label + '\t' + example.caption +
           '\n';
  }
  write_file(path, out);
}

}  // namespace memecap
