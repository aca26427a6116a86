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

#include "pada/harness.hpp"

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "pada/baselines.hpp"
#include "pada/error.hpp"

namespace pada {
namespace {

ExperimentReport cell(const std::string& model, const std::string& target, double f1, double shift,
                      std::uint64_t seed = 1) {
  ExperimentReport r;
  r.model = model;
  r.setting.target = target;
  r.target_f1 = f1;
  r.source_dev_f1 = f1 + shift;
  r.shift = shift;
  r.seed = seed;
  return r;
}

}  // namespace

TEST_CASE("model kind names") {
  for (auto kind : {ModelKind::kPada, ModelKind::kPadaNc, ModelKind::kPadaDn, ModelKind::kNoda, ModelKind::kMoe,
                    ModelKind::kUpperBound}) {
    CHECK(parse_model_kind(model_kind_name(kind)) == kind);
  }
  CHECK(model_kind_name(ModelKind::kPadaNc) == "pada-nc");
  CHECK_THROWS_AS(parse_model_kind("bert"), Error);
}

TEST_CASE("shift matrix") {
  SUBCASE("single cell") {
    const std::vector<ExperimentReport> one{cell("pada", "a", 0.75, 0.125)};
    const auto m = shift_matrix(one);
    CHECK(m.f1(0, 0) == 0.75);
    CHECK(m.shift(0, 0) == 0.125);
    CHECK(to_csv(m) == "model,a:f1,a:shift,mean_f1,mean_abs_shift\npada,0.750000,0.125000,0.750000,0.125000\n");
  }
  SUBCASE("negative shifts count by magnitude") {
    const std::vector<ExperimentReport> reports{cell("noda", "a", 0.5, -0.25), cell("noda", "b", 0.7, 0.125)};
    const auto m = shift_matrix(reports);
    CHECK(mean_abs_shift(m).front() == doctest::Approx(0.1875));
    CHECK(m.column_min_abs == std::vector<double>{0.25, 0.125});
    CHECK(to_csv(m) ==
          "model,a:f1,a:shift,b:f1,b:shift,mean_f1,mean_abs_shift\n"
          "noda,0.500000,-0.250000,0.700000,0.125000,0.600000,0.187500\n");
    const auto svg = to_svg(m);
    CHECK(svg.find("-25.0") != std::string::npos);
    CHECK(svg.find("rgb(255,") != std::string::npos);
  }
  SUBCASE("seeds are averaged with a sample deviation") {
    const std::vector<ExperimentReport> reports{cell("pada", "a", 0.5, 0.1, 1), cell("pada", "a", 0.7, 0.3, 2)};
    const auto m = shift_matrix(reports);
    CHECK(m.seeds == 2);
    CHECK(m.f1(0, 0) == doctest::Approx(0.6));
    CHECK(m.f1_sd(0, 0) == doctest::Approx(std::sqrt(0.02)));
    CHECK(to_csv(m).starts_with("model,a:f1,a:shift,a:f1_sd,a:shift_sd,"));
  }
  SUBCASE("incomplete grids") {
    const std::vector<ExperimentReport> holes{cell("pada", "a", 0.5, 0.0), cell("noda", "b", 0.5, 0.0)};
    try {
      shift_matrix(holes);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("model 'pada' on target 'b'") != std::string::npos);
    }
    const std::vector<ExperimentReport> uneven{cell("pada", "a", 0.5, 0.0, 1), cell("pada", "a", 0.5, 0.0, 2),
                                               cell("pada", "b", 0.5, 0.0, 1)};
    CHECK_THROWS_AS(shift_matrix(uneven), Error);
    CHECK_THROWS_AS(shift_matrix(std::vector<ExperimentReport>{}), Error);
  }
}

TEST_CASE("report json round trip") {
  auto r = cell("pada", "movies", 0.8125, 0.0625, 7);
  r.setting.sources = {"airlines", "electronics"};
  r.config_hash = "00ff";
  r.parameter_count = 1234;
  r.checkpoint_bytes = 9876;
  r.prompt_fallbacks = 2;
  r.per_domain_dev = {{"airlines", 0.5}};
  r.training_logs = {{EpochLog{1, 0.5, 0.25, 0.75, 1e-3}}};
  const auto back = report_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK(back.seed == 7);
  CHECK(back.training_logs.front().front().gen_loss == 0.5);
  CHECK_THROWS_AS(report_from_json("{\"model\": 1}"), Error);
}

TEST_CASE("run setting") {
  const auto ds = fixture::small_synthetic();
  const auto config = fixture::tiny_experiment();
  const auto settings = make_loo_settings(ds);
  const auto& setting = settings.front();

  SUBCASE("source dev is scored on the pooled dev set") {
    TrainedSetting trained;
    const auto r = run_setting(ds, setting, ModelKind::kNoda, config, 3, &trained);
    const auto& params = trained.models.front().second;
    const auto& vocab = trained.artifacts.vocab;
    const auto metric = metric_for(ds, config.metric);
    const auto classifier = [&](const Example& ex) { return pada_nc_predict(params, ex.text, vocab); };
    CHECK(r.source_dev_f1 == evaluate(pooled_dev(ds, setting.sources), classifier, ds, metric));
    CHECK(r.target_f1 == evaluate(ds.domain(setting.target).evaluation_pool(), classifier, ds, metric));
    CHECK(r.shift == r.source_dev_f1 - r.target_f1);
    CHECK(r.parameter_count == params.parameter_count());
    CHECK(r.checkpoint_bytes == checkpoint_size(params));
  }

  SUBCASE("reports are deterministic") {
    const auto a = run_setting(ds, setting, ModelKind::kPada, config, 5);
    const auto b = run_setting(ds, setting, ModelKind::kPada, config, 5);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.training_logs.front().front().gen_loss.has_value());
  }

  SUBCASE("pada-dn without the mixture drops the generative task") {
    auto plain = config;
    plain.dn_mixture = false;
    const auto r = run_setting(ds, setting, ModelKind::kPadaDn, plain, 5);
    for (const auto& e : r.training_logs.front()) CHECK_FALSE(e.gen_loss.has_value());
  }

  SUBCASE("setting errors") {
    CHECK_THROWS_AS(run_setting(ds, {"nowhere", setting.sources}, ModelKind::kNoda, config, 1), Error);
    auto self = setting;
    self.sources.push_back(setting.target);
    CHECK_THROWS_AS(run_setting(ds, self, ModelKind::kNoda, config, 1), Error);
  }
}

TEST_CASE("alpha grid search") {
  const auto ds = fixture::small_synthetic();
  auto config = fixture::tiny_experiment();
  const auto setting = make_loo_settings(ds).front();
  CHECK_THROWS_AS(grid_search_alpha(ds, setting, std::vector<double>{}, config, 1), Error);

  const auto single = grid_search_alpha(ds, setting, std::vector<double>{0.4}, config, 1);
  CHECK(single.best_alpha == 0.4);
  CHECK(single.dev_scores.size() == 1);

  // A vanishing learning rate leaves every alpha at the same dev score.
  config.train.lr = 1e-300;
  const auto tied = grid_search_alpha(ds, setting, std::vector<double>{0.9, 0.25, 0.5}, config, 1);
  REQUIRE(tied.dev_scores.size() == 3);
  CHECK(tied.dev_scores[0].first == 0.25);
  CHECK(tied.dev_scores[0].second == tied.dev_scores[2].second);
  CHECK(tied.best_alpha == 0.25);
}

TEST_CASE("leave-one-out runs are independent of the thread count") {
  const auto ds = fixture::small_synthetic(3, 20);
  auto config = fixture::tiny_experiment();
  config.train.epochs = 1;
  const std::vector<ModelKind> models{ModelKind::kNoda, ModelKind::kPadaNc};
  const std::vector<std::uint64_t> seeds{1};
  const auto serial = run_leave_one_out(ds, models, config, seeds, 1);
  const auto parallel = run_leave_one_out(ds, models, config, seeds, 3);
  REQUIRE(serial.size() == 6);
  CHECK(to_csv(shift_matrix(serial)) == to_csv(shift_matrix(parallel)));
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(to_json(serial[i]) == to_json(parallel[i]));
}

}  // namespace pada
