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

// Caption corpus: tokenization, vocabulary with min-count UNK cut, encoding
// and the UNK-density filter.

#ifndef MEMECAP_CORPUS_HPP_
#define MEMECAP_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace memecap {

using TokenId = std::uint32_t;

inline constexpr TokenId kStartId = 0;
inline constexpr TokenId kEndId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr std::size_t kNumSpecialTokens = 3;

inline constexpr std::string_view kStartToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";

inline constexpr int kDefaultMinCount = 3;
inline constexpr int kMaxUnksPerCaption = 2;

// Lowercases ASCII and splits into words (runs of letters, digits, non-ASCII
// bytes and interior apostrophes) and single-character punctuation tokens
// from the set . , ! ? ' " ; : ( ) -. Any other symbol is a separator.
std::vector<std::string> tokenize(std::string_view raw);

// Space-joins tokens.
std::string detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  struct Entry {
    std::string token;
    std::uint64_t count = 0;
    bool operator==(const Entry&) const = default;
  };

  // Specials only.
  Vocabulary();

  // Keeps every token seen at least min_count times. Ids after the specials
  // are ordered by descending count, ties lexicographic.
  static Vocabulary build(const std::vector<std::vector<std::string>>& captions,
                          int min_count = kDefaultMinCount);

  // Entries must start with the three specials and contain no duplicates.
  static Vocabulary from_entries(std::vector<Entry> entries);

  // `token \t count` per line, id order.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text,
                              const std::string& source = "<vocab>");
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  std::size_t size() const { return entries_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id_or_unk(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::uint64_t count(TokenId id) const;
  const std::vector<Entry>& entries() const { return entries_; }

  bool operator==(const Vocabulary& other) const {
    return entries_ == other.entries_;
  }

 private:
  void index();

  std::vector<Entry> entries_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct EncodedCaption {
  std::vector<TokenId> ids;  // START ... END
  int unk_count = 0;         // interior UNKs only
};

EncodedCaption encode_caption(std::span<const std::string> tokens,
                              const Vocabulary& vocab);
std::vector<TokenId> encode_label(std::span<const std::string> tokens,
                                  const Vocabulary& vocab);
// Surface forms for ids, specials included.
std::vector<std::string> decode_ids(std::span<const TokenId> ids,
                                    const Vocabulary& vocab);

struct RawExample {
  std::string image_id;
  std::string label;
  std::string caption;
  std::size_t line = 0;
};

struct MemeExample {
  std::string image_id;
  std::vector<TokenId> label_ids;
  std::vector<TokenId> caption_ids;
  int unk_count = 0;
  bool operator==(const MemeExample&) const = default;
};

struct Dataset {
  std::vector<MemeExample> examples;
  Vocabulary vocab;
};

struct PreprocessStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::size_t vocab_size = 0;
};

// Reads the three-field TSV (image_id, label, caption). Blank lines are
// skipped; anything else that is not exactly three fields is an error.
std::vector<RawExample> read_raw_examples(const std::filesystem::path& path);
std::vector<RawExample> parse_raw_examples(std::string_view text,
                                           const std::string& source);

// Keeps examples with at most kMaxUnksPerCaption interior UNKs, in order.
std::vector<MemeExample> filter_dataset(std::vector<MemeExample> examples);

MemeExample encode_example(const RawExample& raw, const Vocabulary& vocab);

struct PreprocessResult {
  Dataset dataset;
  std::vector<RawExample> kept;  // normalized text of the surviving examples
  PreprocessStats stats;
};

// Tokenize, build the vocabulary over captions, encode and filter.
PreprocessResult preprocess(const std::vector<RawExample>& raw,
                            int min_count = kDefaultMinCount);

// Encodes every example of a TSV file with an existing vocabulary. No
// filtering.
Dataset load_dataset(const std::filesystem::path& path,
                     const Vocabulary& vocab);

// Writes normalized text (tokens space-joined) in the input TSV layout, so
// that load_dataset with the same vocabulary reproduces the same ids.
void write_examples(const std::vector<RawExample>& raw,
                    const std::filesystem::path& path);

}  // namespace memecap

#endif  // MEMECAP_CORPUS_HPP_
