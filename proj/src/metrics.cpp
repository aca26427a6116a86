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

#include "pada/metrics.hpp"

#include "pada/error.hpp"
#include "pada/inference.hpp"

namespace pada {
namespace {

Error metrics_error(const std::string& message) { return Error("metrics", message); }

void check_inputs(std::span<const int> predictions, std::span<const int> golds, int n_labels) {
  if (predictions.size() != golds.size()) throw metrics_error("predictions and golds differ in length");
  if (predictions.empty()) throw metrics_error("no predictions to score");
  for (auto span : {predictions, golds}) {
    for (int label : span) {
      if (label < 0 || label >= n_labels) {
        throw metrics_error("label " + std::to_string(label) + " outside the label set of size " +
                            std::to_string(n_labels));
      }
    }
  }
}

double class_f1(std::span<const int> predictions, std::span<const int> golds, int positive) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] == positive;
    const bool g = golds[i] == positive;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

}  // namespace

void MetricSpec::validate(int n_labels) const {
  if (kind == MetricKind::kBinaryF1 && (positive < 0 || positive >= n_labels)) {
    throw metrics_error("binary F1 needs a declared positive class");
  }
}

MetricSpec metric_for(const MultiDomainDataset& dataset, MetricKind kind) {
  MetricSpec spec{kind, -1};
  if (kind == MetricKind::kBinaryF1) {
    if (!dataset.positive_label) throw metrics_error("binary F1 needs a declared positive label");
    spec.positive = dataset.label_index(*dataset.positive_label);
  }
  return spec;
}

double f1_binary(std::span<const int> predictions, std::span<const int> golds, int positive, int n_labels) {
  check_inputs(predictions, golds, n_labels);
  if (positive < 0 || positive >= n_labels) throw metrics_error("positive class outside the label set");
  return class_f1(predictions, golds, positive);
}

double f1_macro(std::span<const int> predictions, std::span<const int> golds, int n_labels) {
  check_inputs(predictions, golds, n_labels);
  double total = 0.0;
  for (int c = 0; c < n_labels; ++c) total += class_f1(predictions, golds, c);
  return total / static_cast<double>(n_labels);
}

double score(const MetricSpec& metric, std::span<const int> predictions, std::span<const int> golds, int n_labels) {
  metric.validate(n_labels);
  return metric.kind == MetricKind::kBinaryF1 ? f1_binary(predictions, golds, metric.positive, n_labels)
                                              : f1_macro(predictions, golds, n_labels);
}

double evaluate(std::span<const Example> examples, const Classifier& classifier, const MultiDomainDataset& dataset,
                const MetricSpec& metric) {
  std::vector<int> predictions, golds;
  predictions.reserve(examples.size());
  golds.reserve(examples.size());
  for (const auto& ex : examples) {
    predictions.push_back(argmax_lowest(classifier(ex)));
    golds.push_back(dataset.label_index(ex.label));
  }
  return score(metric, predictions, golds, static_cast<int>(dataset.labels.size()));
}

}  // namespace pada
