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

#ifndef PADA_INFERENCE_HPP_
#define PADA_INFERENCE_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"
#include "pada/model.hpp"

namespace pada {

struct BeamConfig {
  int num_candidates = 5;
  int beam_size = 10;
  int num_groups = 5;
  double diversity_penalty = 1.5;
  int max_output_len = 40;
  // Rank final candidates by score / length instead of the raw sum.
  bool length_normalize = false;

  void validate() const;
};

// Next-token log-probabilities given a prefix that starts with BOS.
using StepScorer = std::function<Eigen::VectorXd(std::span<const TokenId>)>;

// The space a decoder walks: a scorer, the token that ends a hypothesis and
// the maximum number of generated tokens.
struct SearchSpace {
  StepScorer score;
  TokenId eos = Vocabulary::kEos;
  int max_len = 40;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // excludes BOS; ends with EOS unless cut at max_len
  double score = 0.0;           // sum of token log-probabilities

  bool operator==(const Hypothesis&) const = default;
};

// Ranking order: higher score first, then lexicographically smaller tokens.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

// Beam search keeping the `width` best partial hypotheses per step. Returns up
// to `width` finished hypotheses, best first.
std::vector<Hypothesis> beam_search(const SearchSpace& space, int width);

// Diverse beam search with Hamming diversity between groups. Returns up to
// num_candidates distinct hypotheses ranked by unpenalized score.
std::vector<Hypothesis> diverse_beam_search(const SearchSpace& space, const BeamConfig& config);

// Search space of a trained model conditioned on an encoded input.
SearchSpace model_search_space(const ModelParams& params, const EncodedInput& encoded, int max_len);

struct GeneratedPrompt {
  std::vector<TokenId> tokens;  // domain name(s), SEP, DRFs; no BOS/EOS
  double score = 0.0;
  int rank = 0;
  bool fallback = false;  // generation was empty and <unk> stood in
};

struct PromptGeneration {
  GeneratedPrompt best;
  std::vector<GeneratedPrompt> candidates;
};

PromptGeneration generate_prompt(const ModelParams& params, std::string_view text, const Vocabulary& vocab,
                                 const BeamConfig& config);

// Prompt tokens as fed to the classifier: SEP markers removed.
std::vector<TokenId> classifier_prompt(const GeneratedPrompt& prompt);

struct Prediction {
  Eigen::VectorXd class_probs;
  int predicted = 0;
  PromptGeneration prompt;
};

// Index of the largest probability; ties go to the lowest class id.
int argmax_lowest(const Eigen::VectorXd& probs);

// Class probabilities for `prompt` + SEP + text (bare text when prompt is empty).
Eigen::VectorXd classify_with_prompt(const ModelParams& params, std::string_view text,
                                     std::span<const TokenId> prompt, const Vocabulary& vocab);

// Generate a prompt, then classify conditioned on it.
Prediction predict(const ModelParams& params, std::string_view text, const Vocabulary& vocab,
                   const BeamConfig& config);

}  // namespace pada

#endif  // PADA_INFERENCE_HPP_
