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

#include "pada/baselines.hpp"

#include "pada/error.hpp"
#include "pada/inference.hpp"

namespace pada {
namespace {

Error baselines_error(const std::string& message) { return Error("baselines", message); }

}  // namespace

std::size_t ExpertEnsemble::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, params] : experts) n += params.parameter_count();
  return n;
}

Eigen::VectorXd average_probabilities(std::span<const Eigen::VectorXd> distributions) {
  if (distributions.empty()) throw baselines_error("nothing to average");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(distributions.front().size());
  for (const auto& d : distributions) {
    if (d.size() != mean.size()) throw baselines_error("distributions disagree on the number of classes");
    mean += d;
  }
  return mean / static_cast<double>(distributions.size());
}

Eigen::VectorXd moe_predict(const ExpertEnsemble& ensemble, std::string_view text, const Vocabulary& vocab) {
  if (ensemble.experts.empty()) throw baselines_error("mixture of experts has no experts");
  std::vector<Eigen::VectorXd> votes;
  for (const auto& [name, params] : ensemble.experts) votes.push_back(classify_with_prompt(params, text, {}, vocab));
  return average_probabilities(votes);
}

Eigen::VectorXd pada_dn_predict(const ModelParams& params, std::string_view text,
                                std::span<const std::string> source_domains, const Vocabulary& vocab) {
  if (source_domains.empty()) throw baselines_error("no source domain names to prompt with");
  std::vector<Eigen::VectorXd> votes;
  for (const auto& name : source_domains) {
    const std::vector<TokenId> prompt{vocab.id(domain_token(name))};
    votes.push_back(classify_with_prompt(params, text, prompt, vocab));
  }
  return average_probabilities(votes);
}

Eigen::VectorXd pada_nc_predict(const ModelParams& params, std::string_view text, const Vocabulary& vocab) {
  return classify_with_prompt(params, text, {}, vocab);
}

std::vector<TrainingItem> plain_items(const MultiDomainDataset& dataset, std::span<const std::string> domains,
                                      const Vocabulary& vocab, const ModelConfig& config) {
  std::vector<TrainingItem> items;
  for (const auto& name : domains) {
    for (const auto& ex : dataset.domain(name).train) {
      items.push_back({std::nullopt, render_discriminative(ex, {}, vocab, dataset.labels, config)});
    }
  }
  return items;
}

std::vector<Example> pooled_dev(const MultiDomainDataset& dataset, std::span<const std::string> domains) {
  std::vector<Example> out;
  for (const auto& name : domains) {
    const auto& dev = dataset.domain(name).dev;
    out.insert(out.end(), dev.begin(), dev.end());
  }
  return out;
}

TrainResult train_noda(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                       const Vocabulary& vocab, const ModelConfig& model_config, TrainConfig train_config,
                       const MetricSpec& metric) {
  train_config.alpha = 0.0;
  const auto items = plain_items(dataset, sources, vocab, model_config);
  const auto dev = pooled_dev(dataset, sources);
  if (dev.empty()) throw baselines_error("no source dev examples for early stopping");
  const DevEvaluator evaluator = [&](const ModelParams& params) {
    return evaluate(dev, [&](const Example& ex) { return pada_nc_predict(params, ex.text, vocab); }, dataset, metric);
  };
  return train(ModelParams::init(model_config), items, train_config, evaluator);
}

TrainResult train_upper_bound(const MultiDomainDataset& dataset, const Vocabulary& vocab,
                              const ModelConfig& model_config, const TrainConfig& train_config,
                              const MetricSpec& metric) {
  const auto all = dataset.domain_names();
  return train_noda(dataset, all, vocab, model_config, train_config, metric);
}

ExpertEnsemble train_moe(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                         const Vocabulary& vocab, const ModelConfig& model_config, const TrainConfig& train_config,
                         const MetricSpec& metric, std::vector<TrainResult>* runs) {
  if (sources.empty()) throw baselines_error("mixture of experts needs at least one source");
  ExpertEnsemble ensemble;
  for (const auto& name : sources) {
    const std::vector<std::string> one{name};
    auto run = train_noda(dataset, one, vocab, model_config, train_config, metric);
    ensemble.experts.emplace_back(name, run.params);
    if (runs) runs->push_back(std::move(run));
  }
  return ensemble;
}

}  // namespace pada
