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

#include "pada/training.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pada/error.hpp"

namespace pada {
namespace {

Error training_error(const std::string& message) { return Error("training", message); }

std::vector<TokenId> text_ids(const Example& example, const Vocabulary& vocab) {
  auto ids = vocab.encode_text(example.text);
  if (ids.empty()) throw training_error("example " + example.id + " has no tokens");
  return ids;
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw training_error("alpha must lie in [0, 1]");
  if (epochs < 1) throw training_error("epochs must be >= 1");
  if (batch_size < 1) throw training_error("batch_size must be >= 1");
  if (!(lr > 0.0)) throw training_error("lr must be positive");
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) throw training_error("warmup_ratio must lie in [0, 1]");
  if (patience < 0) throw training_error("patience must be >= 0");
}

TaskInstance render_generative(const Example& example, const PromptAnnotation& annotation, const Vocabulary& vocab,
                               const ModelConfig& config) {
  if (annotation.example_id != example.id) {
    throw training_error("annotation for " + annotation.example_id + " applied to " + example.id);
  }
  TaskInstance inst;
  inst.task = Task::kGenerative;
  inst.input.push_back(Vocabulary::kDomainPrefix);
  const auto ids = text_ids(example, vocab);
  inst.input.insert(inst.input.end(), ids.begin(), ids.end());
  if (static_cast<int>(inst.input.size()) > config.max_input_len) {
    inst.input.resize(static_cast<std::size_t>(config.max_input_len));
  }

  const std::string name = domain_token(example.domain);
  const bool has_name = vocab.contains(name);
  if (!has_name && annotation.drfs.empty()) {
    throw training_error("example " + example.id + " has neither a domain token nor DRFs to generate");
  }
  if (has_name) inst.target.push_back(vocab.id(name));
  inst.target.push_back(Vocabulary::kSep);
  for (const auto& drf : annotation.drfs) inst.target.push_back(vocab.id(drf));
  if (static_cast<int>(inst.target.size()) >= config.max_output_len) {
    inst.target.resize(static_cast<std::size_t>(config.max_output_len - 1));
  }
  inst.target.push_back(Vocabulary::kEos);
  return inst;
}

std::vector<TokenId> prompted_input(std::span<const TokenId> prompt, std::span<const TokenId> text,
                                    int max_input_len) {
  std::vector<TokenId> input(prompt.begin(), prompt.end());
  if (!prompt.empty()) input.push_back(Vocabulary::kSep);
  const auto room = static_cast<std::size_t>(std::max(max_input_len, 0));
  const std::size_t keep = input.size() >= room ? 0 : std::min(text.size(), room - input.size());
  input.insert(input.end(), text.begin(), text.begin() + static_cast<std::ptrdiff_t>(keep));
  return input;
}

std::vector<TokenId> gold_prompt(const PromptAnnotation& annotation, const Vocabulary& vocab) {
  std::vector<TokenId> prompt;
  const std::string name = domain_token(annotation.domain);
  if (vocab.contains(name)) prompt.push_back(vocab.id(name));
  for (const auto& drf : annotation.drfs) prompt.push_back(vocab.id(drf));
  return prompt;
}

TaskInstance render_discriminative(const Example& example, std::span<const TokenId> prompt, const Vocabulary& vocab,
                                   const std::vector<std::string>& labels, const ModelConfig& config) {
  auto it = std::find(labels.begin(), labels.end(), example.label);
  if (it == labels.end()) throw training_error("unknown label '" + example.label + "' on example " + example.id);
  TaskInstance inst;
  inst.task = Task::kDiscriminative;
  inst.label = static_cast<int>(it - labels.begin());
  inst.input = prompted_input(prompt, text_ids(example, vocab), config.max_input_len);
  if (inst.input.size() <= prompt.size() + (prompt.empty() ? 0 : 1)) {
    throw training_error("prompt leaves no room for the text of " + example.id);
  }
  return inst;
}

std::vector<TaskInstance> mix_tasks(std::span<const TrainingItem> items, double alpha, std::mt19937_64& rng) {
  std::bernoulli_distribution generative(alpha);
  std::vector<TaskInstance> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    const bool gen = generative(rng);
    if (gen && item.generative) {
      out.push_back(*item.generative);
    } else {
      out.push_back(item.discriminative);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<TaskInstance> mix_tasks(std::span<const TrainingItem> items, double alpha, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return mix_tasks(items, alpha, rng);
}

std::vector<std::vector<TaskInstance>> make_batches(std::vector<TaskInstance> instances, int batch_size,
                                                    std::mt19937_64& rng) {
  std::vector<std::vector<TaskInstance>> batches;
  for (Task task : {Task::kGenerative, Task::kDiscriminative}) {
    std::vector<TaskInstance> current;
    for (auto& inst : instances) {
      if (inst.task != task) continue;
      current.push_back(std::move(inst));
      if (static_cast<int>(current.size()) == batch_size) batches.push_back(std::exchange(current, {}));
    }
    if (!current.empty()) batches.push_back(std::move(current));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

double learning_rate(long step, long total_steps, const TrainConfig& config) {
  const long warmup = std::lround(config.warmup_ratio * static_cast<double>(total_steps));
  if (step <= warmup) return config.lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps <= warmup) return config.lr;
  const double remaining = static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
  return config.lr * std::max(0.0, remaining);
}

AdamState::AdamState(const ModelParams& params)
    : first_moment(ModelParams::zeros_like(params)), second_moment(ModelParams::zeros_like(params)) {}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, long step, double lr,
               const TrainConfig& config) {
  if (step < 1) throw training_error("Adam step index must be >= 1");
  grads.for_each([](const std::string& name, const Mat& g) {
    if (!g.allFinite()) throw training_error("non-finite gradient in tensor '" + name + "'");
  });
  std::vector<const Mat*> g_list;
  grads.for_each([&](const std::string&, const Mat& g) { g_list.push_back(&g); });
  std::vector<Mat*> m_list, v_list;
  state.first_moment.for_each([&](const std::string&, Mat& m) { m_list.push_back(&m); });
  state.second_moment.for_each([&](const std::string&, Mat& v) { v_list.push_back(&v); });

  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  std::size_t i = 0;
  params.for_each([&](const std::string&, Mat& p) {
    const Mat& g = *g_list[i];
    Mat& m = *m_list[i];
    Mat& v = *v_list[i];
    ++i;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + config.adam_eps);
  });
}

std::string to_jsonl(const std::vector<EpochLog>& log) {
  std::string out;
  for (const auto& e : log) {
    nlohmann::ordered_json rec;
    rec["epoch"] = e.epoch;
    if (e.gen_loss) rec["gen_loss"] = *e.gen_loss;
    if (e.disc_loss) rec["disc_loss"] = *e.disc_loss;
    rec["dev_f1"] = e.dev_f1;
    rec["lr"] = e.lr;
    out += rec.dump() + "\n";
  }
  return out;
}

TrainResult train(ModelParams params, std::span<const TrainingItem> items, const TrainConfig& config,
                  const DevEvaluator& evaluate_dev) {
  config.validate();
  if (items.empty()) throw training_error("no training items");

  // The whole schedule is drawn up front so the decay knows the step count.
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<std::vector<TaskInstance>>> plan;
  long total_steps = 0;
  for (int e = 0; e < config.epochs; ++e) {
    plan.push_back(make_batches(mix_tasks(items, config.alpha, rng), config.batch_size, rng));
    total_steps += static_cast<long>(plan.back().size());
  }

  TrainResult result{params, {}, 0, -1.0, 0};
  AdamState adam(params);
  long step = 0;
  int since_best = 0;
  for (int e = 0; e < config.epochs; ++e) {
    double gen_sum = 0.0, disc_sum = 0.0;
    int gen_batches = 0, disc_batches = 0;
    double lr = 0.0;
    for (const auto& batch : plan[static_cast<std::size_t>(e)]) {
      ++step;
      auto [loss, grads] = loss_and_grads(params, batch);
      lr = learning_rate(step, total_steps, config);
      adam_step(params, grads, adam, step, lr, config);
      if (batch.front().task == Task::kGenerative) {
        gen_sum += loss;
        ++gen_batches;
      } else {
        disc_sum += loss;
        ++disc_batches;
      }
    }
    EpochLog entry;
    entry.epoch = e + 1;
    if (gen_batches > 0) entry.gen_loss = gen_sum / gen_batches;
    if (disc_batches > 0) entry.disc_loss = disc_sum / disc_batches;
    entry.dev_f1 = evaluate_dev(params);
    entry.lr = lr;
    result.log.push_back(entry);
    result.steps = step;
    if (entry.dev_f1 > result.best_dev) {
      result.best_dev = entry.dev_f1;
      result.best_epoch = entry.epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best > config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace pada
