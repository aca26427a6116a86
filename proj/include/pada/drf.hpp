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

#ifndef PADA_DRF_HPP_
#define PADA_DRF_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"

namespace pada {

using TokenCounts = std::map<std::string, long>;

struct DomainRelatedFeature {
  std::string token;
  double mi = 0.0;     // bits
  double ratio = 0.0;  // C_other / C_domain

  bool operator==(const DomainRelatedFeature&) const = default;
};

// A source domain's signature: its DRF set, ordered by descending MI.
struct DomainProfile {
  std::string name;
  double rho = 0.0;
  std::vector<DomainRelatedFeature> drfs;
  TokenCounts token_counts;

  bool contains(const std::string& token) const;

  bool operator==(const DomainProfile&) const = default;
};

// Occurrence totals over the training text of one domain.
TokenCounts count_tokens(const MultiDomainDataset& dataset, const std::string& domain);

// MI in bits between token presence and membership in `domain`, over the
// training documents of `sources`. Covers every token seen in those documents.
std::map<std::string, double> mutual_information(const MultiDomainDataset& dataset,
                                                 std::span<const std::string> sources,
                                                 const std::string& domain);

// Mutual information of a 2x2 contingency table of document counts:
// n11 = in-domain docs with the token, n10 = in-domain docs without it, etc.
double contingency_mi(long n11, long n10, long n01, long n00);

class RatioFilter {
 public:
  RatioFilter(const std::map<std::string, TokenCounts>& per_domain, const std::string& domain, double rho);

  // C_other(n) / C_domain(n) <= rho and C_domain(n) > 0.
  bool operator()(const std::string& token) const;
  double ratio(const std::string& token) const;

  static bool passes(long count_domain, long count_other, double rho);

 private:
  TokenCounts in_domain_;
  TokenCounts other_;
  double rho_;
};

RatioFilter ratio_filter(const std::map<std::string, TokenCounts>& per_domain, const std::string& domain, double rho);

inline constexpr double kDefaultRho = 1.5;
// MI scores closer than this rank as ties.
inline constexpr double kMiTieTolerance = 1e-12;
inline constexpr int kDefaultDrfSetSize = 50;

// Sort by MI (ties by token), drop tokens failing the ratio filter, keep the
// first k_drf.
DomainProfile extract_drf_set(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                              const std::string& domain, double rho = kDefaultRho,
                              int k_drf = kDefaultDrfSetSize);

void save_profile(const DomainProfile& profile, const std::filesystem::path& path);
DomainProfile load_profile(const std::filesystem::path& path);

// Static token vectors, one row per vocabulary id.
class EmbeddingTable {
 public:
  EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors);

  int dimension() const { return static_cast<int>(vectors_.cols()); }
  std::size_t size() const { return tokens_.size(); }
  // Row for `token`; out-of-table tokens share the "<unk>" row.
  Eigen::VectorXd vector(const std::string& token) const;
  const Eigen::MatrixXd& matrix() const { return vectors_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // "token v1 ... vd", one row per token.
  void save_text(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, Eigen::Index> index_;
  Eigen::MatrixXd vectors_;
};

// Positive PMI co-occurrence matrix over a symmetric window, counted on the
// source training text, for every vocabulary token.
Eigen::MatrixXd ppmi_matrix(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                            const Vocabulary& vocab, int window);

// Rank-d factorization of the PPMI matrix: rows of U_d * S_d, so the Gram
// matrix of the embeddings equals that of the PPMI rows once d >= rank.
EmbeddingTable build_embeddings(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                                const Vocabulary& vocab, int d_emb, int window = 2);

struct PromptAnnotation {
  std::string example_id;
  std::string domain;
  std::vector<std::string> drfs;
  std::vector<double> distances;
};

inline constexpr int kDefaultPromptFeatures = 5;

// The m DRFs of `profile` closest (min L2 over the example's tokens) to the
// example; ties by MI rank, then token.
PromptAnnotation annotate_prompt(const Example& example, const DomainProfile& profile,
                                 const EmbeddingTable& embeddings, int m = kDefaultPromptFeatures);

}  // namespace pada

#endif  // PADA_DRF_HPP_
