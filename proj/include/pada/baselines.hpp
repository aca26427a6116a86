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

#ifndef PADA_BASELINES_HPP_
#define PADA_BASELINES_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"
#include "pada/metrics.hpp"
#include "pada/model.hpp"
#include "pada/training.hpp"

namespace pada {

// One independently trained model per source domain.
struct ExpertEnsemble {
  std::vector<std::pair<std::string, ModelParams>> experts;

  std::size_t parameter_count() const;
};

// Arithmetic mean of probability vectors of equal length.
Eigen::VectorXd average_probabilities(std::span<const Eigen::VectorXd> distributions);

Eigen::VectorXd moe_predict(const ExpertEnsemble& ensemble, std::string_view text, const Vocabulary& vocab);

// Classify once per source domain name used as the prompt and average.
Eigen::VectorXd pada_dn_predict(const ModelParams& params, std::string_view text,
                                std::span<const std::string> source_domains, const Vocabulary& vocab);

// Classify the bare text; the generation head is not consulted.
Eigen::VectorXd pada_nc_predict(const ModelParams& params, std::string_view text, const Vocabulary& vocab);

// Discriminative-only items over the training text of `domains`, no prompt.
std::vector<TrainingItem> plain_items(const MultiDomainDataset& dataset, std::span<const std::string> domains,
                                      const Vocabulary& vocab, const ModelConfig& config);

// Dev examples of `domains`, concatenated in domain order.
std::vector<Example> pooled_dev(const MultiDomainDataset& dataset, std::span<const std::string> domains);

// Straightforward multi-source training: alpha fixed to 0, bare-text inputs,
// early stopping on pooled source dev.
TrainResult train_noda(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                       const Vocabulary& vocab, const ModelConfig& model_config, TrainConfig train_config,
                       const MetricSpec& metric);

// train_noda over every domain, including the one later used as target.
TrainResult train_upper_bound(const MultiDomainDataset& dataset, const Vocabulary& vocab,
                              const ModelConfig& model_config, const TrainConfig& train_config,
                              const MetricSpec& metric);

// One train_noda run per source, each early-stopped on its own dev set.
ExpertEnsemble train_moe(const MultiDomainDataset& dataset, std::span<const std::string> sources,
                         const Vocabulary& vocab, const ModelConfig& model_config, const TrainConfig& train_config,
                         const MetricSpec& metric, std::vector<TrainResult>* runs = nullptr);

}  // namespace pada

#endif  // PADA_BASELINES_HPP_
