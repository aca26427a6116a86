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

#ifndef PADA_TRAINING_HPP_
#define PADA_TRAINING_HPP_

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pada/corpus.hpp"
#include "pada/drf.hpp"
#include "pada/model.hpp"

namespace pada {

struct TrainConfig {
  double alpha = 0.75;  // probability an example becomes a generative instance
  int epochs = 5;
  int batch_size = 32;
  double lr = 5e-5;
  double warmup_ratio = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

// Grid the mixture parameter is tuned over.
inline const std::vector<double> kAlphaGrid = {0.1, 0.25, 0.5, 0.75, 0.9};

// Input: [domain-prefix] + text. Target: [domain, SEP] + DRFs + [EOS],
// truncated to max_output_len with EOS kept.
TaskInstance render_generative(const Example& example, const PromptAnnotation& annotation, const Vocabulary& vocab,
                               const ModelConfig& config);

// Input: prompt + [SEP] + text, cutting text from the right to fit
// max_input_len. An empty prompt yields the bare text with no SEP.
TaskInstance render_discriminative(const Example& example, std::span<const TokenId> prompt,
                                   const Vocabulary& vocab, const std::vector<std::string>& labels,
                                   const ModelConfig& config);

// prompt + [SEP] + text cut from the right to max_input_len; the bare text
// when the prompt is empty.
std::vector<TokenId> prompted_input(std::span<const TokenId> prompt, std::span<const TokenId> text,
                                    int max_input_len);

// Gold prompt used for training: the domain token followed by the DRFs.
std::vector<TokenId> gold_prompt(const PromptAnnotation& annotation, const Vocabulary& vocab);

// The two renderings an example can contribute; which one is used in an
// epoch is drawn by mix_tasks.
struct TrainingItem {
  std::optional<TaskInstance> generative;
  TaskInstance discriminative;
};

// One instance per item, generative with probability alpha, then shuffled.
std::vector<TaskInstance> mix_tasks(std::span<const TrainingItem> items, double alpha, std::mt19937_64& rng);
std::vector<TaskInstance> mix_tasks(std::span<const TrainingItem> items, double alpha, std::uint64_t seed);

// Task-homogeneous batches in shuffled order.
std::vector<std::vector<TaskInstance>> make_batches(std::vector<TaskInstance> instances, int batch_size,
                                                    std::mt19937_64& rng);

// Linear warmup to `lr` over warmup_ratio * total_steps, then linear decay to 0.
double learning_rate(long step, long total_steps, const TrainConfig& config);

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;

  explicit AdamState(const ModelParams& params);
};

// One bias-corrected Adam update at 1-based `step` with learning rate `lr`.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, long step, double lr,
               const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  std::optional<double> gen_loss;
  std::optional<double> disc_loss;
  double dev_f1 = 0.0;
  double lr = 0.0;
};

std::string to_jsonl(const std::vector<EpochLog>& log);

struct TrainResult {
  ModelParams params;  // best checkpoint by dev score
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev = 0.0;
  long steps = 0;
};

using DevEvaluator = std::function<double(const ModelParams&)>;

// Runs up to config.epochs epochs, scoring the dev evaluator after each and
// stopping once `patience` epochs pass without improvement.
TrainResult train(ModelParams params, std::span<const TrainingItem> items, const TrainConfig& config,
                  const DevEvaluator& evaluate_dev);

}  // namespace pada

#endif  // PADA_TRAINING_HPP_
