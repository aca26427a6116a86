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

#include "pada/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pada/error.hpp"

namespace pada {
namespace {

Error corpus_error(const std::string& message) { return Error("corpus", message); }

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out = "{";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += labels[i];
  }
  return out + "}";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.substr(i, kSepMarker.size()) == kSepMarker) {
      tokens.emplace_back(kSepMarker);
      i += kSepMarker.size();
      continue;
    }
    if (!is_alnum(text[i])) {
      ++i;
      continue;
    }
    std::string token;
    while (i < text.size() && is_alnum(text[i])) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::string domain_token(std::string_view domain_name) {
  std::string out;
  for (const auto& part : tokenize(domain_name)) {
    if (part == kSepMarker) continue;
    if (!out.empty()) out.push_back('-');
    out += part;
  }
  if (out.empty()) throw corpus_error("domain name '" + std::string(domain_name) + "' has no alphanumerics");
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (std::string_view special : std::initializer_list<std::string_view>{"<pad>", "<unk>", "<s>", "</s>", kSepMarker, "domain:"}) {
    add(special);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  std::string key(token);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw corpus_error("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<TokenId> Vocabulary::encode_text(std::string_view text) const {
  const auto tokens = tokenize(text);
  return encode(tokens);
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw corpus_error("cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw corpus_error("cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (row < static_cast<std::size_t>(kNumSpecial)) {
      if (line != vocab.tokens_[row]) throw corpus_error("vocabulary file has unexpected special token '" + line + "'");
    } else if (vocab.add(line) != static_cast<TokenId>(row)) {
      throw corpus_error("duplicate vocabulary entry '" + line + "'");
    }
    ++row;
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Dataset

std::vector<Example> DomainSplits::evaluation_pool() const {
  if (!test.empty()) return test;
  std::vector<Example> all = train;
  all.insert(all.end(), dev.begin(), dev.end());
  return all;
}

std::vector<std::string> MultiDomainDataset::domain_names() const {
  std::vector<std::string> names;
  names.reserve(domains.size());
  for (const auto& d : domains) names.push_back(d.name);
  return names;
}

const DomainSplits& MultiDomainDataset::domain(std::string_view name) const {
  for (const auto& d : domains) {
    if (d.name == name) return d;
  }
  throw corpus_error("unknown domain '" + std::string(name) + "'");
}

bool MultiDomainDataset::has_domain(std::string_view name) const {
  return std::any_of(domains.begin(), domains.end(), [&](const auto& d) { return d.name == name; });
}

int MultiDomainDataset::label_index(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw corpus_error("unknown label '" + std::string(label) + "'; declared labels are " + join_labels(labels));
  }
  return static_cast<int>(it - labels.begin());
}

void MultiDomainDataset::validate() const {
  if (domains.empty()) throw corpus_error("empty dataset");
  if (positive_label) label_index(*positive_label);
  for (const auto& d : domains) {
    if (d.name.empty()) throw corpus_error("empty domain name");
    std::set<std::string> ids;
    for (const auto* split : {&d.train, &d.dev, &d.test}) {
      for (const auto& ex : *split) {
        if (ex.domain != d.name) throw corpus_error("example " + ex.id + " filed under wrong domain");
        label_index(ex.label);
        if (tokenize(ex.text).empty()) throw corpus_error("example " + ex.id + " has no tokens");
        if (!ids.insert(ex.id).second) throw corpus_error("duplicate example id '" + ex.id + "' in domain " + d.name);
      }
    }
  }
}

MultiDomainDataset parse_jsonl(std::string_view content, const JsonlSchema& schema) {
  using nlohmann::json;
  struct Record {
    Example example;
    std::optional<std::string> split;
  };
  std::vector<Record> records;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  auto get_string = [&](const json& obj, const std::string& key) -> std::optional<std::string> {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw corpus_error("line " + std::to_string(line_no) + ": field '" + key + "' is not a string");
    return it->get<std::string>();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw corpus_error("malformed record on line " + std::to_string(line_no));
    }
    if (!obj.is_object()) throw corpus_error("malformed record on line " + std::to_string(line_no));
    Record rec;
    auto text = get_string(obj, schema.text);
    auto premise = get_string(obj, schema.premise);
    auto hypothesis = get_string(obj, schema.hypothesis);
    if (text) {
      rec.example.text = *text;
    } else if (premise && hypothesis) {
      rec.example.text = *premise + " " + std::string(kSepMarker) + " " + *hypothesis;
    } else {
      throw corpus_error("line " + std::to_string(line_no) + ": missing '" + schema.text + "' or '" +
                         schema.premise + "'+'" + schema.hypothesis + "'");
    }
    auto label = get_string(obj, schema.label);
    auto domain = get_string(obj, schema.domain);
    if (!label) throw corpus_error("line " + std::to_string(line_no) + ": missing '" + schema.label + "'");
    if (!domain || domain->empty()) throw corpus_error("line " + std::to_string(line_no) + ": missing '" + schema.domain + "'");
    rec.example.label = *label;
    rec.example.domain = *domain;
    rec.example.id = get_string(obj, schema.id).value_or(*domain + "-" + std::to_string(line_no));
    rec.split = get_string(obj, schema.split);
    if (rec.split && *rec.split != "train" && *rec.split != "dev" && *rec.split != "test") {
      throw corpus_error("line " + std::to_string(line_no) + ": unknown split '" + *rec.split + "'");
    }
    if (tokenize(rec.example.text).empty()) {
      throw corpus_error("line " + std::to_string(line_no) + ": text has no tokens");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw corpus_error("empty dataset");

  MultiDomainDataset dataset;
  dataset.positive_label = schema.positive_label;
  if (schema.labels.empty()) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.example.label);
    dataset.labels.assign(seen.begin(), seen.end());
  } else {
    dataset.labels = schema.labels;
  }

  // Domains in order of first appearance.
  std::map<std::string, std::vector<const Record*>> by_domain;
  for (const auto& r : records) {
    if (!dataset.has_domain(r.example.domain)) dataset.domains.push_back(DomainSplits{r.example.domain, {}, {}, {}});
    by_domain[r.example.domain].push_back(&r);
  }
  const bool any_split = std::any_of(records.begin(), records.end(), [](const Record& r) { return r.split.has_value(); });
  for (auto& d : dataset.domains) {
    const auto& recs = by_domain[d.name];
    const std::size_t n_train = recs.size() * 4 / 5;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = *recs[i];
      dataset.label_index(r.example.label);
      std::string split = any_split ? r.split.value_or("train") : (i < n_train || recs.size() == 1 ? "train" : "dev");
      auto& bucket = split == "train" ? d.train : split == "dev" ? d.dev : d.test;
      bucket.push_back(r.example);
    }
  }
  dataset.validate();
  return dataset;
}

MultiDomainDataset ingest_jsonl(const std::filesystem::path& path, const JsonlSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corpus_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_jsonl(buffer.str(), schema);
}

std::string to_jsonl(const MultiDomainDataset& dataset) {
  std::string out;
  for (const auto& d : dataset.domains) {
    for (const auto& [split, examples] : {std::pair{"train", &d.train}, std::pair{"dev", &d.dev}, std::pair{"test", &d.test}}) {
      for (const auto& ex : *examples) {
        nlohmann::ordered_json rec;
        rec["id"] = ex.id;
        rec["text"] = ex.text;
        rec["label"] = ex.label;
        rec["domain"] = ex.domain;
        rec["split"] = split;
        out += rec.dump();
        out.push_back('\n');
      }
    }
  }
  return out;
}

void write_jsonl(const MultiDomainDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw corpus_error("cannot write " + path.string());
  out << to_jsonl(dataset);
}

Vocabulary build_vocabulary(const MultiDomainDataset& dataset, std::span<const std::string> sources, int min_freq) {
  if (min_freq < 1) throw corpus_error("min_freq must be >= 1");
  std::map<std::string, long> counts;
  std::size_t n_examples = 0;
  for (const auto& name : sources) {
    for (const auto& ex : dataset.domain(name).train) {
      ++n_examples;
      for (auto& t : tokenize(ex.text)) {
        if (t != kSepMarker) ++counts[t];
      }
    }
  }
  if (n_examples == 0) throw corpus_error("no source training examples to build a vocabulary from");
  std::vector<std::pair<std::string, long>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_freq) ranked.emplace_back(token, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [token, count] : ranked) vocab.add(token);
  return vocab;
}

void add_domain_tokens(Vocabulary& vocab, std::span<const std::string> domain_names) {
  for (const auto& name : domain_names) vocab.add(domain_token(name));
}

std::vector<LeaveOneOutSetting> make_loo_settings(const MultiDomainDataset& dataset) {
  if (dataset.domains.size() < 2) throw corpus_error("leave-one-out needs at least 2 domains");
  std::vector<LeaveOneOutSetting> settings;
  for (const auto& target : dataset.domains) {
    LeaveOneOutSetting s{target.name, {}};
    for (const auto& d : dataset.domains) {
      if (d.name != target.name) s.sources.push_back(d.name);
    }
    settings.push_back(std::move(s));
  }
  return settings;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

const std::vector<std::string>& synthetic_domain_names() {
  static const std::vector<std::string> names = {"airlines", "restaurants", "electronics", "movies",
                                                 "furniture", "books",       "sports",      "travel"};
  return names;
}

}  // namespace

MultiDomainDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.examples_per_domain <= 0 || spec.num_domains <= 0) throw corpus_error("zero examples requested");
  if (spec.min_length < 4 || spec.max_length < spec.min_length) throw corpus_error("invalid synthetic length range");
  if (spec.domain_vocab_size < 2 || spec.cue_vocab_size < 1 || spec.filler_vocab_size < 1) {
    throw corpus_error("synthetic word pools must be non-empty");
  }
  if (spec.cue_slots < 1 || spec.cue_slots % 2 == 0 || spec.cue_slots + 1 > spec.min_length) {
    throw corpus_error("cue_slots must be odd and shorter than min_length");
  }
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&rng](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

  MultiDomainDataset dataset;
  dataset.labels = {"neg", "pos"};
  dataset.positive_label = "pos";
  const auto& names = synthetic_domain_names();
  for (int d = 0; d < spec.num_domains; ++d) {
    const std::string name = d < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(d)]
                                                                 : "domain" + std::to_string(d);
    // Domain words carry the domain name as a prefix, which keeps pools disjoint.
    std::string stem = name;
    std::erase(stem, '-');
    const int family = d / 2;
    const bool flipped = spec.rule == LabelRule::kFamilyFlip && family % 2 == 1;

    DomainSplits splits{name, {}, {}, {}};
    std::vector<Example> examples;
    for (int i = 0; i < spec.examples_per_domain; ++i) {
      const int length = uniform(spec.min_length, spec.max_length);
      bool positive = coin(0.5);
      std::vector<std::string> words;
      // The majority polarity of the cue slots carries the label.
      const bool majority_good = flipped ? !positive : positive;
      const int half = spec.cue_slots / 2;
      const int n_good = majority_good ? uniform(half + 1, spec.cue_slots) : uniform(0, half);
      for (int c = 0; c < spec.cue_slots; ++c) {
        const std::string polarity = c < n_good ? "good" : "bad";
        const std::string lexicon = spec.rule == LabelRule::kFamilyLexicon ? "family" + std::to_string(family) : "";
        words.push_back(lexicon + polarity + std::to_string(uniform(0, spec.cue_vocab_size - 1)));
      }
      if (spec.rule == LabelRule::kFamilyFlip) {
        words.push_back("family" + std::to_string(family) + "w" + std::to_string(uniform(0, 3)));
      }
      int first_domain_word = -1;
      if (spec.rule == LabelRule::kDomainParity) {
        first_domain_word = uniform(0, spec.domain_vocab_size - 1);
        positive = first_domain_word % 2 == 1;
        words.clear();
        words.push_back(stem + std::to_string(first_domain_word));
      }
      while (static_cast<int>(words.size()) < length) {
        if (coin(spec.domain_word_rate)) {
          words.push_back(stem + std::to_string(uniform(0, spec.domain_vocab_size - 1)));
        } else {
          words.push_back("w" + std::to_string(uniform(0, spec.filler_vocab_size - 1)));
        }
      }
      // Domain-parity examples keep their label-bearing word first.
      const auto shuffle_from = spec.rule == LabelRule::kDomainParity ? words.begin() + 1 : words.begin();
      std::shuffle(shuffle_from, words.end(), rng);
      if (spec.label_noise > 0.0 && coin(spec.label_noise)) positive = !positive;

      Example ex;
      ex.id = name + "-" + std::to_string(i);
      ex.domain = name;
      ex.label = positive ? "pos" : "neg";
      for (const auto& w : words) {
        if (!ex.text.empty()) ex.text.push_back(' ');
        ex.text += w;
      }
      examples.push_back(std::move(ex));
    }
    const std::size_t n_train = examples.size() * 4 / 5;
    splits.train.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_train));
    splits.dev.assign(examples.begin() + static_cast<std::ptrdiff_t>(n_train), examples.end());
    dataset.domains.push_back(std::move(splits));
  }
  return dataset;
}

}  // namespace pada
