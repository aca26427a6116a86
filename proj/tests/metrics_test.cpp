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

#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pada/error.hpp"

namespace pada {

TEST_CASE("binary f1 examples") {
  // TP 2, FP 1, FN 1.
  const std::vector<int> pred{1, 1, 1, 0, 0};
  const std::vector<int> gold{1, 1, 0, 1, 0};
  CHECK(f1_binary(pred, gold, 1, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(f1_binary(gold, gold, 1, 2) == 1.0);
  const std::vector<int> zeros{0, 0, 0};
  CHECK(f1_binary(zeros, zeros, 1, 2) == 0.0);
  CHECK_THROWS_AS(f1_binary(pred, std::vector<int>{1}, 1, 2), Error);
  CHECK_THROWS_AS(f1_binary(std::vector<int>{}, std::vector<int>{}, 1, 2), Error);
  CHECK_THROWS_AS(f1_binary(std::vector<int>{2}, std::vector<int>{1}, 1, 2), Error);
  CHECK_THROWS_AS(f1_binary(pred, gold, 2, 2), Error);
}

TEST_CASE("macro f1 examples") {
  CHECK(f1_macro(std::vector<int>{0, 0}, std::vector<int>{0, 1}, 2) == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
  CHECK(f1_macro(std::vector<int>{0, 1}, std::vector<int>{1, 0}, 2) == 0.0);
  CHECK(f1_macro(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, 3) == 1.0);
  // Classes absent from both sides count as zero.
  CHECK(f1_macro(std::vector<int>{0, 0}, std::vector<int>{0, 0}, 3) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(f1_macro(std::vector<int>{3}, std::vector<int>{0}, 3), Error);
}

TEST_CASE("f1 matches a confusion matrix on random vectors") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int labels = std::uniform_int_distribution<int>(2, 5)(rng);
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    std::uniform_int_distribution<int> label(0, labels - 1);
    std::vector<int> pred(n), gold(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = label(rng);
      gold[i] = label(rng);
    }
    const auto per_class = oracle::confusion_f1(pred, gold, labels);
    const int positive = label(rng);
    CHECK(std::abs(f1_binary(pred, gold, positive, labels) - per_class[positive]) <= 1e-12);
    CHECK(std::abs(f1_macro(pred, gold, labels) - oracle::confusion_macro_f1(pred, gold, labels)) <= 1e-12);
  }
}

TEST_CASE("metric specs") {
  MultiDomainDataset ds;
  ds.labels = {"no", "yes"};
  CHECK_THROWS_AS(metric_for(ds, MetricKind::kBinaryF1), Error);
  CHECK(metric_for(ds, MetricKind::kMacroF1).kind == MetricKind::kMacroF1);
  ds.positive_label = "yes";
  CHECK(metric_for(ds, MetricKind::kBinaryF1).positive == 1);

  const std::vector<Example> examples{{"a", "x", "yes", "d"}, {"b", "y", "no", "d"}};
  const auto always_yes = [](const Example&) { return Eigen::Vector2d(0.2, 0.8).eval(); };
  CHECK(evaluate(examples, always_yes, ds, metric_for(ds, MetricKind::kBinaryF1)) == doctest::Approx(2.0 / 3.0));
}

}  // namespace pada
