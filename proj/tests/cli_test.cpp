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

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"

namespace pada::cli {
namespace fs = std::filesystem;
namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pada_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small enough to train in seconds.
const std::vector<std::string> kSmall = {"--examples-per-domain", "30", "--d-model", "8", "--n-heads", "2",
                                         "--d-ffn", "16", "--epochs", "1", "--embedding-dim", "4"};

int run_with(std::vector<std::string> args, const std::vector<std::string>& extra = kSmall) {
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

}  // namespace

TEST_CASE("config text") {
  const auto values = parse_config_text("# comment\n\n alpha = 0.1 \nmodels=pada,noda\n");
  CHECK(values.at("alpha") == "0.1");
  CHECK(values.at("models") == "pada,noda");
  CHECK_THROWS_AS(parse_config_text("alpha 0.1\n"), UsageError);
  CHECK_THROWS_AS(parse_config_text("alhpa = 0.1\n"), UsageError);
}

TEST_CASE("flags override the file, which overrides defaults") {
  CHECK(RunConfig::merge({}, {}).get_double("alpha") == 0.25);
  CHECK(RunConfig::merge({{"alpha", "0.1"}}, {}).get_double("alpha") == 0.1);
  CHECK(RunConfig::merge({{"alpha", "0.1"}}, {{"alpha", "0.75"}}).get_double("alpha") == 0.75);
  CHECK_THROWS_AS(RunConfig::merge({}, {{"bogus", "1"}}), UsageError);
}

TEST_CASE("config values") {
  const auto c = RunConfig::merge({{"epochs", "3x"}, {"lr", "fast"}, {"dn_mixture", "maybe"}, {"task_metric", "f2"}}, {});
  CHECK_THROWS_AS(c.get_int("epochs"), UsageError);
  CHECK_THROWS_AS(c.get_double("lr"), UsageError);
  CHECK_THROWS_AS(c.get_bool("dn_mixture"), UsageError);
  CHECK_THROWS_AS(c.metric(), UsageError);
  CHECK(RunConfig::merge({}, {{"models", " pada , ,noda"}}).get_list("models") == std::vector<std::string>{"pada", "noda"});
}

TEST_CASE("config hash") {
  const auto a = RunConfig::merge({{"alpha", "0.5"}}, {{"out", "x"}});
  const auto b = RunConfig::merge({}, {{"alpha", "0.5"}, {"out", "y"}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() != RunConfig::merge({}, {{"alpha", "0.6"}}).hash());
  CHECK(RunConfig::merge(parse_config_text(a.to_text()), {}).hash() == a.hash());
  CHECK(a.experiment().config_hash == a.hash());
}

TEST_CASE("defaults are the desk configuration") {
  const auto c = RunConfig::merge({}, {}).experiment();
  const auto desk = desk_experiment();
  CHECK(c.model == desk.model);
  CHECK(c.train.alpha == desk.train.alpha);
  CHECK(c.train.lr == desk.train.lr);
  CHECK(c.train.epochs == desk.train.epochs);
  CHECK(c.train.batch_size == desk.train.batch_size);
  CHECK(c.train.patience == desk.train.patience);
  CHECK(c.beam.beam_size == desk.beam.beam_size);
  CHECK(c.beam.max_output_len == desk.beam.max_output_len);
  CHECK(c.drf.embedding_dim == desk.drf.embedding_dim);
  CHECK(c.drf.rho == desk.drf.rho);
  const auto spec = RunConfig::merge({}, {}).synthetic();
  CHECK(spec.examples_per_domain == SyntheticSpec{}.examples_per_domain);
  CHECK(spec.rule == LabelRule::kFamilyLexicon);
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const auto out = (tmp.path / "out").string();
  CHECK(run({}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"train", "--help"}) == kExitOk);
  CHECK(run({"train", "--out", out}) == kExitUsage);
  CHECK(run({"gen-data", "--no-such-flag", "1", "--out", out}) == kExitUsage);
  CHECK(run({"gen-data", "--config", (tmp.path / "missing.cfg").string(), "--out", out}) == kExitRuntime);
  CHECK(run({"gen-data", "--epochs", "two", "--out", out}) == kExitOk);
  CHECK(run({"run-loo", "--epochs", "two", "--data", "x.jsonl", "--out", out}) == kExitUsage);
  std::ofstream(tmp.path / "bad.jsonl") << "{\"text\": \"a\"}\n";
  CHECK(run({"run-loo", "--data", (tmp.path / "bad.jsonl").string(), "--out", out}) == kExitRuntime);
  CHECK(run({"run-loo", "--models", "pada,bert", "--data", (tmp.path / "bad.jsonl").string(), "--out", out}) ==
        kExitUsage);
}

TEST_CASE("pipeline from generated data to predictions") {
  TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  REQUIRE(run_with({"gen-data", "--out", p("data")}) == kExitOk);
  const auto data = p("data/data.jsonl");
  REQUIRE(run_with({"drf", "extract", "--data", data, "--target", "movies", "--out", p("drf")}) == kExitOk);
  CHECK(fs::exists(tmp.path / "drf" / "drf-airlines.json"));
  CHECK_FALSE(fs::exists(tmp.path / "drf" / "drf-movies.json"));
  CHECK(fs::exists(tmp.path / "drf" / "embeddings.txt"));

  REQUIRE(run_with({"train", "--data", data, "--target", "movies", "--drfs", p("drf"), "--out", p("train")}) ==
          kExitOk);
  const auto report = nlohmann::json::parse(slurp(tmp.path / "train" / "report.json"));
  CHECK(report.at("config_hash").get<std::string>().size() == 16);

  REQUIRE(run_with({"predict", "--data", data, "--target", "movies", "--checkpoint", p("train"), "--out",
                    p("pred")}) == kExitOk);
  std::istringstream lines(slurp(tmp.path / "pred" / "predictions.jsonl"));
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto record = nlohmann::json::parse(line);
    CHECK(record.at("generated_prompt").is_string());
    CHECK(record.at("candidates").size() == 5);
    const double total = record.at("class_probs").at("neg").get<double>() + record.at("class_probs").at("pos").get<double>();
    CHECK(std::abs(total - 1.0) <= 1e-9);
    const auto label = record.at("predicted_label").get<std::string>();
    CHECK((label == "neg" || label == "pos"));
  }
  CHECK(n == 30);

  REQUIRE(run_with({"train", "--model", "moe", "--data", data, "--target", "movies", "--out", p("moe")}) == kExitOk);
  CHECK(fs::exists(tmp.path / "moe" / "expert-electronics.ckpt"));
  REQUIRE(run_with({"predict", "--data", data, "--checkpoint", p("moe"), "--out", p("pmoe")}) == kExitOk);
  const auto first = nlohmann::json::parse(slurp(tmp.path / "pmoe" / "predictions.jsonl").substr(0, slurp(tmp.path / "pmoe" / "predictions.jsonl").find('\n')));
  CHECK(first.at("generated_prompt").is_null());

  // Everything written lives under the --out directories named above.
  std::set<std::string> top;
  for (const auto& entry : fs::directory_iterator(tmp.path)) top.insert(entry.path().filename().string());
  CHECK(top == std::set<std::string>{"data", "drf", "train", "pred", "moe", "pmoe"});
}

TEST_CASE("run-loo is reproducible and report rebuilds its tables") {
  TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  REQUIRE(run_with({"gen-data", "--domains", "3", "--out", p("data")}) == kExitOk);
  const std::vector<std::string> loo{"run-loo", "--models", "pada,noda", "--data", p("data/data.jsonl")};
  auto first = loo, second = loo;
  first.insert(first.end(), {"--out", p("a")});
  second.insert(second.end(), {"--out", p("b")});
  REQUIRE(run_with(first) == kExitOk);
  REQUIRE(run_with(second) == kExitOk);
  const auto csv = slurp(tmp.path / "a" / "shifts.csv");
  CHECK(csv == slurp(tmp.path / "b" / "shifts.csv"));
  CHECK(slurp(tmp.path / "a" / "shifts.svg") == slurp(tmp.path / "b" / "shifts.svg"));
  CHECK(std::distance(fs::directory_iterator(tmp.path / "a" / "reports"), fs::directory_iterator{}) == 6);

  REQUIRE(run({"report", "--reports", p("a/reports"), "--out", p("rebuilt")}) == kExitOk);
  CHECK(slurp(tmp.path / "rebuilt" / "shifts.csv") == csv);
}

}  // namespace pada::cli
