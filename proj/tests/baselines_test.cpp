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

#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "pada/error.hpp"
#include "pada/harness.hpp"

namespace pada {

TEST_CASE("probability averaging") {
  const std::vector<Eigen::VectorXd> two{Eigen::Vector2d(0.6, 0.4), Eigen::Vector2d(0.2, 0.8)};
  const auto avg = average_probabilities(two);
  CHECK(avg(0) == doctest::Approx(0.4));
  CHECK(avg(1) == doctest::Approx(0.6));
  CHECK(argmax_lowest(avg) == 1);

  const std::vector<Eigen::VectorXd> one{Eigen::Vector3d(0.1, 0.7, 0.2)};
  CHECK(average_probabilities(one) == one.front());

  const std::vector<Eigen::VectorXd> flat{Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)};
  CHECK(argmax_lowest(average_probabilities(flat)) == 0);

  std::vector<Eigen::VectorXd> three{Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d(0.3, 0.7), Eigen::Vector2d(0.55, 0.45)};
  const auto forward = average_probabilities(three);
  std::reverse(three.begin(), three.end());
  CHECK((average_probabilities(three) - forward).cwiseAbs().maxCoeff() <= 1e-15);

  const std::vector<Eigen::VectorXd> mismatched{Eigen::Vector2d(0.5, 0.5), Eigen::Vector3d(0.2, 0.3, 0.5)};
  CHECK_THROWS_AS(average_probabilities(mismatched), Error);
  CHECK_THROWS_AS(average_probabilities(std::vector<Eigen::VectorXd>{}), Error);
}

TEST_CASE("prompt-free and name-prompted predictions") {
  const auto ds = fixture::small_synthetic();
  const auto config = fixture::tiny_experiment();
  const auto sources = ds.domain_names();
  const auto vocab = [&] {
    auto v = build_vocabulary(ds, sources);
    add_domain_tokens(v, sources);
    return v;
  }();
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  const auto params = ModelParams::init(mc);
  const auto& text = ds.domains.front().dev.front().text;

  SUBCASE("pada-nc classifies the bare text") {
    const auto p = pada_nc_predict(params, text, vocab);
    CHECK(p == classify_with_prompt(params, text, {}, vocab));
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
    const std::vector<TokenId> prompt{vocab.id(sources.front())};
    CHECK(p != classify_with_prompt(params, text, prompt, vocab));
  }

  SUBCASE("pada-dn averages one pass per source name") {
    std::vector<Eigen::VectorXd> passes;
    for (const auto& s : sources) {
      passes.push_back(classify_with_prompt(params, text, std::vector<TokenId>{vocab.id(domain_token(s))}, vocab));
    }
    const auto p = pada_dn_predict(params, text, sources, vocab);
    CHECK((p - average_probabilities(passes)).cwiseAbs().maxCoeff() <= 1e-15);
    auto reversed = sources;
    std::reverse(reversed.begin(), reversed.end());
    CHECK((pada_dn_predict(params, text, reversed, vocab) - p).cwiseAbs().maxCoeff() <= 1e-15);
    const std::vector<std::string> same{sources.front(), sources.front()};
    CHECK((pada_dn_predict(params, text, same, vocab) - passes.front()).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("mixture of experts") {
    ExpertEnsemble ensemble{{{sources[0], params}, {sources[1], ModelParams::init([&] {
                                                       auto c = mc;
                                                       c.seed = 5;
                                                       return c;
                                                     }())}}};
    const auto p = moe_predict(ensemble, text, vocab);
    const std::vector<Eigen::VectorXd> each{pada_nc_predict(ensemble.experts[0].second, text, vocab),
                                            pada_nc_predict(ensemble.experts[1].second, text, vocab)};
    CHECK((p - average_probabilities(each)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(ensemble.parameter_count() == 2 * params.parameter_count());
  }
}

TEST_CASE("pooled dev concatenates domains in order") {
  const auto ds = fixture::small_synthetic();
  const std::vector<std::string> two{ds.domains[1].name, ds.domains[0].name};
  const auto pooled = pooled_dev(ds, two);
  REQUIRE(pooled.size() == ds.domains[0].dev.size() + ds.domains[1].dev.size());
  CHECK(pooled.front() == ds.domains[1].dev.front());
  CHECK(pooled.back() == ds.domains[0].dev.back());
}

TEST_CASE("noda is pada with alpha 0 and no prompts") {
  const auto ds = fixture::small_synthetic();
  auto config = fixture::tiny_experiment();
  const std::vector<std::string> sources{ds.domains[0].name, ds.domains[1].name};
  const auto vocab = build_vocabulary(ds, sources);
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  const auto metric = metric_for(ds, MetricKind::kBinaryF1);

  const auto noda = train_noda(ds, sources, vocab, mc, config.train, metric);
  for (const auto& e : noda.log) CHECK_FALSE(e.gen_loss.has_value());

  // The same run assembled by hand from prompt-free items.
  std::vector<TrainingItem> items;
  for (const auto& s : sources) {
    for (const auto& ex : ds.domain(s).train) {
      items.push_back({std::nullopt, render_discriminative(ex, {}, vocab, ds.labels, mc)});
    }
  }
  auto train_config = config.train;
  train_config.alpha = 0.0;
  const auto dev = pooled_dev(ds, sources);
  const auto by_hand = train(ModelParams::init(mc), items, train_config, [&](const ModelParams& p) {
    return evaluate(dev, [&](const Example& ex) { return pada_nc_predict(p, ex.text, vocab); }, ds, metric);
  });
  CHECK(to_jsonl(noda.log) == to_jsonl(by_hand.log));
  std::size_t equal = 0, total = 0;
  std::vector<const Mat*> theirs;
  by_hand.params.for_each([&](const std::string&, const Mat& m) { theirs.push_back(&m); });
  noda.params.for_each([&](const std::string&, const Mat& m) {
    equal += m == *theirs[total] ? 1 : 0;
    ++total;
  });
  CHECK(equal == total);
}

TEST_CASE("experts and the upper bound") {
  const auto ds = fixture::small_synthetic();
  const auto config = fixture::tiny_experiment();
  const auto all = ds.domain_names();
  const auto vocab = build_vocabulary(ds, all);
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  const auto metric = metric_for(ds, MetricKind::kBinaryF1);

  std::vector<TrainResult> runs;
  const auto ensemble = train_moe(ds, all, vocab, mc, config.train, metric, &runs);
  REQUIRE(ensemble.experts.size() == all.size());
  CHECK(runs.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(ensemble.experts[i].first == all[i]);

  const auto ub = train_upper_bound(ds, vocab, mc, config.train, metric);
  const auto noda = train_noda(ds, all, vocab, mc, config.train, metric);
  CHECK(ub.params.embedding == noda.params.embedding);
}

}  // namespace pada
