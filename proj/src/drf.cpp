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

#include "pada/drf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>

#include "json.hpp"
#include "pada/error.hpp"

namespace pada {
namespace {

Error drf_error(const std::string& message) { return Error("drf", message); }

double cell(long joint, long row, long col, long total) {
  if (joint == 0) return 0.0;
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(joint) / n;
  return p * std::log2(static_cast<double>(joint) * n / (static_cast<double>(row) * static_cast<double>(col)));
}

}  // namespace

bool DomainProfile::contains(const std::string& token) const {
  return std::any_of(drfs.begin(), drfs.end(), [&](const auto& f) { return f.token == token; });
}

TokenCounts count_tokens(const MultiDomainDataset& dataset, const std::string& domain) {
  TokenCounts counts;
  for (const auto& ex : dataset.domain(domain).train) {
    for (const auto& t : tokenize(ex.text)) {
      if (t != kSepMarker) ++counts[t];
    }
  }
  return counts;
}

double contingency_mi(long n11, long n10, long n01, long n00) {
  // MI is unchanged by swapping rows, swapping columns or transposing; every
  // equivalent table is evaluated in one canonical form so equal scores tie
  // bit for bit.
  std::array<long, 4> best{n11, n10, n01, n00};
  for (int flips = 0; flips < 8; ++flips) {
    long a = n11, b = n10, c = n01, d = n00;
    if (flips & 1) std::swap(a, c), std::swap(b, d);
    if (flips & 2) std::swap(a, b), std::swap(c, d);
    if (flips & 4) std::swap(b, c);
    best = std::min(best, std::array<long, 4>{a, b, c, d});
  }
  std::tie(n11, n10, n01, n00) = std::tie(best[0], best[1], best[2], best[3]);
  const long total = n11 + n10 + n01 + n00;
  if (total == 0) return 0.0;
  const long d1 = n11 + n10, d0 = n01 + n00;
  const long t1 = n11 + n01, t0 = n10 + n00;
  const double mi = cell(n11, d1, t1, total) + cell(n10, d1, t0, total) + cell(n01, d0, t1, total) +
                    cell(n00, d0, t0, total);
  return std::max(0.0, mi);
}

std::map<std::string, double> mutual_information(const MultiDomainDataset& dataset,
                                                 std::span<const std::string> sources, const std::string& domain) {
  if (std::find(sources.begin(), sources.end(), domain) == sources.end()) {
    throw drf_error("domain '" + domain + "' is not among the sources");
  }
  std::map<std::string, long> docs_in, docs_out;
  long n_in = 0, n_out = 0;
  for (const auto& name : sources) {
    const bool inside = name == domain;
    for (const auto& ex : dataset.domain(name).train) {
      auto tokens = tokenize(ex.text);
      std::set<std::string> present(tokens.begin(), tokens.end());
      present.erase(std::string(kSepMarker));
      auto& df = inside ? docs_in : docs_out;
      for (const auto& t : present) ++df[t];
      ++(inside ? n_in : n_out);
    }
  }
  if (n_in + n_out == 0) throw drf_error("no source training examples");
  std::map<std::string, double> scores;
  for (const auto* df : {&docs_in, &docs_out}) {
    for (const auto& [token, unused] : *df) {
      if (scores.count(token)) continue;
      const long a = docs_in.count(token) ? docs_in.at(token) : 0;
      const long b = docs_out.count(token) ? docs_out.at(token) : 0;
      scores[token] = contingency_mi(a, n_in - a, b, n_out - b);
    }
  }
  return scores;
}

RatioFilter::RatioFilter(const std::map<std::string, TokenCounts>& per_domain, const std::string& domain, double rho)
    : rho_(rho) {
  if (rho < 1.0) throw drf_error("rho must be >= 1");
  for (const auto& [name, counts] : per_domain) {
    auto& target = name == domain ? in_domain_ : other_;
    for (const auto& [token, count] : counts) target[token] += count;
  }
}

bool RatioFilter::passes(long count_domain, long count_other, double rho) {
  if (count_domain <= 0) return false;
  return static_cast<double>(count_other) <= rho * static_cast<double>(count_domain);
}

bool RatioFilter::operator()(const std::string& token) const {
  auto in = in_domain_.find(token);
  auto out = other_.find(token);
  return passes(in == in_domain_.end() ? 0 : in->second, out == other_.end() ? 0 : out->second, rho_);
}

double RatioFilter::ratio(const std::string& token) const {
  auto in = in_domain_.find(token);
  auto out = other_.find(token);
  const long c_in = in == in_domain_.end() ? 0 : in->second;
  const long c_out = out == other_.end() ? 0 : out->second;
  if (c_in == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(c_out) / static_cast<double>(c_in);
}

RatioFilter ratio_filter(const std::map<std::string, TokenCounts>& per_domain, const std::string& domain, double rho) {
  return RatioFilter(per_domain, domain, rho);
}

DomainProfile extract_drf_set(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                              const std::string& domain, double rho, int k_drf) {
  if (k_drf < 1) throw drf_error("DRF set size must be >= 1");
  const auto mi = mutual_information(dataset, sources, domain);
  std::map<std::string, TokenCounts> per_domain;
  for (const auto& name : sources) per_domain[name] = count_tokens(dataset, name);
  const RatioFilter filter(per_domain, domain, rho);

  std::vector<std::pair<std::string, double>> ranked(mi.begin(), mi.end());
  // std::map iteration is already in ascending token order.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  // Scores within kMiTieTolerance of their neighbour are ties, ordered by token.
  for (std::size_t begin = 0; begin < ranked.size();) {
    std::size_t end = begin + 1;
    while (end < ranked.size() && ranked[end - 1].second - ranked[end].second <= kMiTieTolerance) ++end;
    std::sort(ranked.begin() + static_cast<std::ptrdiff_t>(begin), ranked.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }

  DomainProfile profile;
  profile.name = domain;
  profile.rho = rho;
  profile.token_counts = per_domain[domain];
  for (const auto& [token, score] : ranked) {
    if (static_cast<int>(profile.drfs.size()) == k_drf) break;
    if (filter(token)) profile.drfs.push_back({token, score, filter.ratio(token)});
  }
  if (profile.drfs.empty()) {
    throw drf_error("no token of domain '" + domain + "' passes the ratio filter; use a larger rho or corpus");
  }
  return profile;
}

void save_profile(const DomainProfile& profile, const std::filesystem::path& path) {
  nlohmann::ordered_json out;
  out["domain"] = profile.name;
  out["rho"] = profile.rho;
  out["drfs"] = nlohmann::ordered_json::array();
  for (const auto& f : profile.drfs) {
    out["drfs"].push_back({{"token", f.token}, {"mi", f.mi}, {"ratio", f.ratio}});
  }
  std::ofstream file(path);
  if (!file) throw drf_error("cannot write " + path.string());
  file << out.dump(2) << '\n';
}

DomainProfile load_profile(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw drf_error("cannot read " + path.string());
  DomainProfile profile;
  try {
    const auto in = nlohmann::json::parse(file);
    profile.name = in.at("domain").get<std::string>();
    profile.rho = in.at("rho").get<double>();
    for (const auto& f : in.at("drfs")) {
      profile.drfs.push_back({f.at("token").get<std::string>(), f.at("mi").get<double>(), f.at("ratio").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw drf_error("malformed profile " + path.string() + ": " + e.what());
  }
  if (profile.drfs.empty()) throw drf_error("profile " + path.string() + " lists no DRFs");
  return profile;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(tokens_.size()) != vectors_.rows()) {
    throw drf_error("embedding table has mismatched token and row counts");
  }
  if (!vectors_.allFinite()) throw drf_error("embedding table has non-finite entries");
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) index_.emplace(tokens_[static_cast<std::size_t>(i)], i);
}

Eigen::VectorXd EmbeddingTable::vector(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) it = index_.find("<unk>");
  if (it == index_.end()) return Eigen::VectorXd::Zero(vectors_.cols());
  return vectors_.row(it->second).transpose();
}

void EmbeddingTable::save_text(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw drf_error("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    out << tokens_[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < vectors_.cols(); ++j) out << ' ' << vectors_(i, j);
    out << '\n';
  }
}

Eigen::MatrixXd ppmi_matrix(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                            const Vocabulary& vocab, int window) {
  if (window < 1) throw drf_error("co-occurrence window must be >= 1");
  const auto n = static_cast<Eigen::Index>(vocab.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& name : sources) {
    for (const auto& ex : dataset.domain(name).train) {
      const auto ids = vocab.encode_text(ex.text);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t hi = std::min(ids.size(), i + static_cast<std::size_t>(window) + 1);
        for (std::size_t j = i + 1; j < hi; ++j) {
          counts(ids[i], ids[j]) += 1.0;
          counts(ids[j], ids[i]) += 1.0;
        }
      }
    }
  }
  const Eigen::VectorXd row = counts.rowwise().sum();
  const double total = row.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, n);
  if (total == 0.0) return ppmi;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (counts(i, j) == 0.0) continue;
      ppmi(i, j) = std::max(0.0, std::log(counts(i, j) * total / (row(i) * row(j))));
    }
  }
  return ppmi;
}

EmbeddingTable build_embeddings(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                const Vocabulary& vocab, int d_emb, int window) {
  if (d_emb < 1) throw drf_error("embedding dimension must be >= 1");
  if (vocab.size() - static_cast<std::size_t>(Vocabulary::kNumSpecial) < 2) {
    throw drf_error("vocabulary too small for embeddings");
  }
  const Eigen::MatrixXd ppmi = ppmi_matrix(dataset, sources, vocab, window);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
  const Eigen::Index rank = std::min<Eigen::Index>(d_emb, svd.singularValues().size());
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(ppmi.rows(), d_emb);
  vectors.leftCols(rank) = svd.matrixU().leftCols(rank) * svd.singularValues().head(rank).asDiagonal();
  // Fix the sign of each component so the output does not depend on solver internals.
  for (Eigen::Index c = 0; c < rank; ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
  return EmbeddingTable(vocab.tokens(), std::move(vectors));
}

PromptAnnotation annotate_prompt(const Example& example, const DomainProfile& profile,
                                 const EmbeddingTable& embeddings, int m) {
  if (profile.drfs.empty()) throw drf_error("profile '" + profile.name + "' has no DRFs");
  auto tokens = tokenize(example.text);
  std::erase(tokens, std::string(kSepMarker));
  if (tokens.empty()) throw drf_error("example " + example.id + " has no tokens");

  std::vector<Eigen::VectorXd> token_vectors;
  token_vectors.reserve(tokens.size());
  for (const auto& t : tokens) token_vectors.push_back(embeddings.vector(t));

  struct Scored {
    double distance;
    std::size_t mi_rank;
    const std::string* token;
  };
  std::vector<Scored> scored;
  scored.reserve(profile.drfs.size());
  for (std::size_t r = 0; r < profile.drfs.size(); ++r) {
    const auto drf_vec = embeddings.vector(profile.drfs[r].token);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      best = std::min(best, (drf_vec - token_vectors[i]).norm());
    }
    scored.push_back({best, r, &profile.drfs[r].token});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.mi_rank != b.mi_rank) return a.mi_rank < b.mi_rank;
    return *a.token < *b.token;
  });

  PromptAnnotation out;
  out.example_id = example.id;
  out.domain = example.domain;
  const std::size_t keep = std::min(scored.size(), static_cast<std::size_t>(std::max(m, 0)));
  for (std::size_t i = 0; i < keep; ++i) {
    out.drfs.push_back(*scored[i].token);
    out.distances.push_back(scored[i].distance);
  }
  return out;
}

}  // namespace pada
