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

#ifndef PADA_METRICS_HPP_
#define PADA_METRICS_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pada/corpus.hpp"

namespace pada {

enum class MetricKind { kBinaryF1, kMacroF1 };

struct MetricSpec {
  MetricKind kind = MetricKind::kBinaryF1;
  int positive = -1;  // class id scored by binary F1

  void validate(int n_labels) const;
};

MetricSpec metric_for(const MultiDomainDataset& dataset, MetricKind kind);

// F1 of the positive class: 2PR / (P + R); zero denominators give 0.
double f1_binary(std::span<const int> predictions, std::span<const int> golds, int positive, int n_labels);

// Unweighted mean of per-class F1 over all n_labels classes.
double f1_macro(std::span<const int> predictions, std::span<const int> golds, int n_labels);

double score(const MetricSpec& metric, std::span<const int> predictions, std::span<const int> golds, int n_labels);

using Classifier = std::function<Eigen::VectorXd(const Example&)>;

// Scores `classifier` (class probabilities per example) on `examples`.
double evaluate(std::span<const Example> examples, const Classifier& classifier, const MultiDomainDataset& dataset,
                const MetricSpec& metric);

}  // namespace pada

#endif  // PADA_METRICS_HPP_
