/* Copyright 2026 The PADA Lab Authors. All Rights Reserved.

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

#ifndef PADA_CORPUS_HPP_
#define PADA_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pada {

using TokenId = std::int32_t;

// Literal marker joining the two segments of a pair-task record.
inline constexpr std::string_view kSepMarker = "<sep>";

struct Example {
  std::string id;
  std::string text;
  std::string label;
  std::string domain;

  bool operator==(const Example&) const = default;
};

// Lowercased alphanumeric runs; kSepMarker is kept as one token.
std::vector<std::string> tokenize(std::string_view text);

// Lowercase, hyphen-joined single-token form of a domain name.
std::string domain_token(std::string_view domain_name);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kSep = 4;
  // Generative-task prefix, the analogue of the "Domain:" prompt.
  static constexpr TokenId kDomainPrefix = 5;
  static constexpr TokenId kNumSpecial = 6;

  Vocabulary();

  // Returns the existing id when the token is already present.
  TokenId add(std::string_view token);
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<TokenId> encode_text(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  // One token per line, in id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct DomainSplits {
  std::string name;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;

  // Test examples, or every example of the domain when no test split exists.
  std::vector<Example> evaluation_pool() const;

  bool operator==(const DomainSplits&) const = default;
};

struct MultiDomainDataset {
  std::vector<DomainSplits> domains;
  std::vector<std::string> labels;
  std::optional<std::string> positive_label;

  std::vector<std::string> domain_names() const;
  const DomainSplits& domain(std::string_view name) const;
  bool has_domain(std::string_view name) const;
  // Index of `label` in `labels`; throws listing the label set otherwise.
  int label_index(std::string_view label) const;

  // Throws when an example's domain or label is not declared.
  void validate() const;

  bool operator==(const MultiDomainDataset&) const = default;
};

struct LeaveOneOutSetting {
  std::string target;
  std::vector<std::string> sources;

  bool operator==(const LeaveOneOutSetting&) const = default;
};

// JSONL field names. Empty `labels` means the label set is inferred (sorted).
struct JsonlSchema {
  std::string id = "id";
  std::string text = "text";
  std::string premise = "premise";
  std::string hypothesis = "hypothesis";
  std::string label = "label";
  std::string domain = "domain";
  std::string split = "split";
  std::vector<std::string> labels;
  std::optional<std::string> positive_label;
};

MultiDomainDataset ingest_jsonl(const std::filesystem::path& path,
                                const JsonlSchema& schema = {});
MultiDomainDataset parse_jsonl(std::string_view content, const JsonlSchema& schema = {});
void write_jsonl(const MultiDomainDataset& dataset, const std::filesystem::path& path);
std::string to_jsonl(const MultiDomainDataset& dataset);

// Vocabulary from the training text of `sources` only. Ids: specials, then
// tokens by descending frequency with lexicographic tie-break.
Vocabulary build_vocabulary(const MultiDomainDataset& dataset,
                            std::span<const std::string> sources, int min_freq = 1);

// Appends one token per domain name (see domain_token).
void add_domain_tokens(Vocabulary& vocab, std::span<const std::string> domain_names);

std::vector<LeaveOneOutSetting> make_loo_settings(const MultiDomainDataset& dataset);

enum class LabelRule {
  // Positive iff positive cue words outnumber negative cue words.
  kCueMajority,
  // Cue polarity is flipped in odd-numbered domains; the family of a domain
  // is signalled by a small pool of family words shared with its partner.
  kFamilyFlip,
  // Parity of the index of the first domain-indicative word.
  kDomainParity,
  // Each family of two domains writes its cue words from its own lexicon.
  kFamilyLexicon,
};

struct SyntheticSpec {
  int num_domains = 4;
  int examples_per_domain = 250;
  int domain_vocab_size = 24;
  int cue_vocab_size = 6;     // per polarity
  int cue_slots = 3;          // odd; the majority polarity decides
  int filler_vocab_size = 24;
  int min_length = 8;
  int max_length = 14;
  double domain_word_rate = 0.4;
  double label_noise = 0.0;
  LabelRule rule = LabelRule::kFamilyLexicon;
  std::uint64_t seed = 13;
};

// Deterministic multi-domain corpus with pairwise-disjoint domain word pools
// and a shared task vocabulary; 4:1 train/dev split inside each domain.
MultiDomainDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace pada

#endif  // PADA_CORPUS_HPP_
