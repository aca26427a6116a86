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

#include "pada/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pada/error.hpp"
#include "pada/training.hpp"

namespace pada {
namespace {

Error inference_error(const std::string& message) { return Error("inference", message); }

std::vector<TokenId> with_bos(const std::vector<TokenId>& tokens) {
  std::vector<TokenId> prefix{Vocabulary::kBos};
  prefix.insert(prefix.end(), tokens.begin(), tokens.end());
  return prefix;
}

bool is_complete(const std::vector<TokenId>& tokens, const SearchSpace& space) {
  return tokens.back() == space.eos || static_cast<int>(tokens.size()) >= space.max_len;
}

// A hypothesis inside one diverse-beam group.
struct GroupBeam {
  std::vector<TokenId> tokens;
  double raw = 0.0;
  double penalized = 0.0;
};

bool group_ranks_before(const GroupBeam& a, const GroupBeam& b) {
  if (a.penalized != b.penalized) return a.penalized > b.penalized;
  return a.tokens < b.tokens;
}

}  // namespace

void BeamConfig::validate() const {
  if (beam_size < 1 || num_groups < 1 || beam_size % num_groups != 0) {
    throw inference_error("beam_size must be a positive multiple of num_groups");
  }
  if (num_candidates < 1 || num_candidates > beam_size) {
    throw inference_error("num_candidates must lie in [1, beam_size]");
  }
  if (diversity_penalty < 0.0) throw inference_error("diversity_penalty must be >= 0");
  if (max_output_len < 1) throw inference_error("max_output_len must be >= 1");
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

std::vector<Hypothesis> beam_search(const SearchSpace& space, int width) {
  if (width < 1) throw inference_error("beam width must be >= 1");
  if (space.max_len < 1) throw inference_error("max_len must be >= 1");
  std::vector<Hypothesis> alive{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (int step = 1; step <= space.max_len && !alive.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : alive) {
      const Eigen::VectorXd logp = space.score(with_bos(h.tokens));
      for (Eigen::Index v = 0; v < logp.size(); ++v) {
        Hypothesis c{h.tokens, h.score + logp(v)};
        c.tokens.push_back(static_cast<TokenId>(v));
        candidates.push_back(std::move(c));
      }
    }
    const auto keep = std::min(candidates.size(), static_cast<std::size_t>(width));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      ranks_before);
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      (is_complete(candidates[i].tokens, space) ? finished : alive).push_back(std::move(candidates[i]));
    }
    // Scores only fall as hypotheses grow, so once `width` finished ones beat
    // every live hypothesis the ranking cannot change.
    if (!alive.empty() && finished.size() >= static_cast<std::size_t>(width)) {
      std::sort(finished.begin(), finished.end(), ranks_before);
      if (finished[static_cast<std::size_t>(width) - 1].score > alive.front().score) break;
    }
  }
  std::sort(finished.begin(), finished.end(), ranks_before);
  if (finished.size() > static_cast<std::size_t>(width)) finished.resize(static_cast<std::size_t>(width));
  return finished;
}

std::vector<Hypothesis> diverse_beam_search(const SearchSpace& space, const BeamConfig& config) {
  config.validate();
  if (space.max_len < 1) throw inference_error("max_len must be >= 1");
  const int groups = config.num_groups;
  const auto group_width = static_cast<std::size_t>(config.beam_size / groups);
  std::vector<std::vector<GroupBeam>> alive(static_cast<std::size_t>(groups), std::vector<GroupBeam>{GroupBeam{}});
  std::vector<std::vector<GroupBeam>> finished(static_cast<std::size_t>(groups));

  for (int step = 1; step <= space.max_len; ++step) {
    // Tokens chosen at this step by the groups decoded so far.
    std::vector<int> emitted;
    bool any_alive = false;
    for (std::size_t g = 0; g < alive.size(); ++g) {
      if (alive[g].empty()) continue;
      std::vector<GroupBeam> candidates;
      for (const auto& beam : alive[g]) {
        const Eigen::VectorXd logp = space.score(with_bos(beam.tokens));
        if (emitted.size() < static_cast<std::size_t>(logp.size())) emitted.resize(static_cast<std::size_t>(logp.size()), 0);
        for (Eigen::Index v = 0; v < logp.size(); ++v) {
          const double penalty = config.diversity_penalty * emitted[static_cast<std::size_t>(v)];
          GroupBeam c{beam.tokens, beam.raw + logp(v), beam.penalized + logp(v) - penalty};
          c.tokens.push_back(static_cast<TokenId>(v));
          candidates.push_back(std::move(c));
        }
      }
      const auto keep = std::min(candidates.size(), group_width);
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                        group_ranks_before);
      alive[g].clear();
      for (std::size_t i = 0; i < keep; ++i) {
        ++emitted[static_cast<std::size_t>(candidates[i].tokens.back())];
        (is_complete(candidates[i].tokens, space) ? finished[g] : alive[g]).push_back(std::move(candidates[i]));
      }
      if (!alive[g].empty() && finished[g].size() >= group_width) {
        std::sort(finished[g].begin(), finished[g].end(), group_ranks_before);
        if (finished[g][group_width - 1].penalized > alive[g].front().penalized) alive[g].clear();
      }
      any_alive = any_alive || !alive[g].empty();
    }
    if (!any_alive) break;
  }

  std::vector<Hypothesis> pooled;
  std::set<std::vector<TokenId>> seen;
  for (auto& group : finished) {
    std::sort(group.begin(), group.end(), group_ranks_before);
    for (std::size_t i = 0; i < std::min(group.size(), group_width); ++i) {
      if (seen.insert(group[i].tokens).second) pooled.push_back({group[i].tokens, group[i].raw});
    }
  }
  if (config.length_normalize) {
    std::sort(pooled.begin(), pooled.end(), [](const Hypothesis& a, const Hypothesis& b) {
      const double sa = a.score / static_cast<double>(a.tokens.size());
      const double sb = b.score / static_cast<double>(b.tokens.size());
      if (sa != sb) return sa > sb;
      return a.tokens < b.tokens;
    });
  } else {
    std::sort(pooled.begin(), pooled.end(), ranks_before);
  }
  if (pooled.size() > static_cast<std::size_t>(config.num_candidates)) {
    pooled.resize(static_cast<std::size_t>(config.num_candidates));
  }
  return pooled;
}

SearchSpace model_search_space(const ModelParams& params, const EncodedInput& encoded, int max_len) {
  SearchSpace space;
  space.score = [&params, &encoded](std::span<const TokenId> prefix) { return decode_step(params, encoded, prefix); };
  space.eos = Vocabulary::kEos;
  space.max_len = std::min(max_len, params.config.max_output_len);
  return space;
}

PromptGeneration generate_prompt(const ModelParams& params, std::string_view text, const Vocabulary& vocab,
                                 const BeamConfig& config) {
  std::vector<TokenId> input{Vocabulary::kDomainPrefix};
  const auto ids = vocab.encode_text(text);
  if (ids.empty()) throw inference_error("text has no tokens");
  input.insert(input.end(), ids.begin(), ids.end());
  if (static_cast<int>(input.size()) > params.config.max_input_len) {
    input.resize(static_cast<std::size_t>(params.config.max_input_len));
  }
  const EncodedInput encoded = encode(params, input);
  const auto hypotheses = diverse_beam_search(model_search_space(params, encoded, config.max_output_len), config);

  PromptGeneration out;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    GeneratedPrompt p;
    p.tokens = hypotheses[i].tokens;
    if (!p.tokens.empty() && p.tokens.back() == Vocabulary::kEos) p.tokens.pop_back();
    p.score = hypotheses[i].score;
    p.rank = static_cast<int>(i) + 1;
    out.candidates.push_back(std::move(p));
  }
  if (out.candidates.empty() || classifier_prompt(out.candidates.front()).empty()) {
    out.best.tokens = {Vocabulary::kUnk};
    out.best.score = out.candidates.empty() ? 0.0 : out.candidates.front().score;
    out.best.rank = 1;
    out.best.fallback = true;
  } else {
    out.best = out.candidates.front();
  }
  return out;
}

std::vector<TokenId> classifier_prompt(const GeneratedPrompt& prompt) {
  std::vector<TokenId> out;
  for (TokenId t : prompt.tokens) {
    if (t != Vocabulary::kSep && t != Vocabulary::kEos && t != Vocabulary::kBos && t != Vocabulary::kPad) {
      out.push_back(t);
    }
  }
  return out;
}

int argmax_lowest(const Eigen::VectorXd& probs) {
  int best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs(i) > probs(best)) best = static_cast<int>(i);
  }
  return best;
}

Eigen::VectorXd classify_with_prompt(const ModelParams& params, std::string_view text,
                                     std::span<const TokenId> prompt, const Vocabulary& vocab) {
  const auto ids = vocab.encode_text(text);
  if (ids.empty()) throw inference_error("text has no tokens");
  // Long generated prompts give up their tail so that some text survives.
  const auto max_prompt = static_cast<std::size_t>(params.config.max_input_len / 2);
  if (prompt.size() > max_prompt) prompt = prompt.first(max_prompt);
  const auto input = prompted_input(prompt, ids, params.config.max_input_len);
  return classify(params, encode(params, input)).array().exp();
}

Prediction predict(const ModelParams& params, std::string_view text, const Vocabulary& vocab,
                   const BeamConfig& config) {
  Prediction out;
  out.prompt = generate_prompt(params, text, vocab, config);
  out.class_probs = classify_with_prompt(params, text, classifier_prompt(out.prompt.best), vocab);
  out.predicted = argmax_lowest(out.class_probs);
  return out;
}

}  // namespace pada
