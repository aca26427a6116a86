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

#include "pada/corpus.hpp"

#include <algorithm>
#include <set>

#include "doctest.h"
#include "pada/error.hpp"

namespace pada {
namespace {

std::size_t domain_size(const DomainSplits& d) { return d.train.size() + d.dev.size() + d.test.size(); }

MultiDomainDataset toy_dataset() {
  MultiDomainDataset ds;
  ds.labels = {"neg", "pos"};
  ds.positive_label = "pos";
  ds.domains.push_back({"a", {{"a1", "x x x y", "pos", "a"}, {"a2", "x z", "neg", "a"}}, {}, {}});
  ds.domains.push_back({"b", {{"b1", "y y q", "pos", "b"}}, {{"b2", "y", "neg", "b"}}, {}});
  ds.domains.push_back({"c", {{"c1", "secret words only", "neg", "c"}}, {}, {}});
  return ds;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Hostages in CAFE!") == std::vector<std::string>{"hostages", "in", "cafe"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a-b  c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("?!-").empty());
  CHECK(tokenize("He left <sep> she stayed") == std::vector<std::string>{"he", "left", "<sep>", "she", "stayed"});
  CHECK(tokenize("x<sep>y") == std::vector<std::string>{"x", "<sep>", "y"});
}

TEST_CASE("tokenize is idempotent on its joined output") {
  for (const char* text : {"Hostages in CAFE!", "a-b  c", "The PIN <sep> is 1234??", "  "}) {
    const auto once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("domain tokens are single hyphen-joined tokens") {
  CHECK(domain_token("Sydney Siege") == "sydney-siege");
  CHECK(domain_token("charlie_hebdo") == "charlie-hebdo");
}

TEST_CASE("ingest errors") {
  CHECK_THROWS_WITH_AS(parse_jsonl(""), "corpus: empty dataset", Error);
  CHECK_THROWS_WITH_AS(parse_jsonl("{\"text\":\"a\",\"label\":\"x\",\"domain\":\"d\"}\n{oops"),
                       "corpus: malformed record on line 2", Error);
  JsonlSchema schema;
  schema.labels = {"neg", "pos"};
  try {
    parse_jsonl("{\"text\":\"a\",\"label\":\"maybe\",\"domain\":\"d\"}", schema);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("maybe") != std::string::npos);
    CHECK(what.find("neg") != std::string::npos);
    CHECK(what.find("pos") != std::string::npos);
  }
}

TEST_CASE("ingest groups records by domain") {
  const auto ds = parse_jsonl(
      "{\"text\":\"one\",\"label\":\"pos\",\"domain\":\"ferguson\"}\n"
      "{\"text\":\"two\",\"label\":\"neg\",\"domain\":\"ottawa\"}\n"
      "{\"text\":\"three\",\"label\":\"neg\",\"domain\":\"ferguson\"}\n");
  REQUIRE(ds.domains.size() == 2);
  CHECK(domain_size(ds.domain("ferguson")) == 2);
  CHECK(domain_size(ds.domain("ottawa")) == 1);
  CHECK(ds.labels == std::vector<std::string>{"neg", "pos"});
}

TEST_CASE("pair records carry exactly one separator") {
  const auto ds = parse_jsonl("{\"premise\":\"A man sleeps.\",\"hypothesis\":\"Nobody sleeps\",\"label\":\"contradiction\","
                              "\"domain\":\"fiction\"}");
  const auto tokens = tokenize(ds.domains.front().train.front().text);
  CHECK(std::count(tokens.begin(), tokens.end(), std::string(kSepMarker)) == 1);
}

TEST_CASE("explicit splits are honoured") {
  const auto ds = parse_jsonl(
      "{\"id\":\"1\",\"text\":\"a\",\"label\":\"y\",\"domain\":\"d\",\"split\":\"train\"}\n"
      "{\"id\":\"2\",\"text\":\"b\",\"label\":\"y\",\"domain\":\"d\",\"split\":\"dev\"}\n"
      "{\"id\":\"3\",\"text\":\"c\",\"label\":\"y\",\"domain\":\"d\",\"split\":\"test\"}\n");
  const auto& d = ds.domain("d");
  CHECK(d.train.size() == 1);
  CHECK(d.dev.size() == 1);
  CHECK(d.test.size() == 1);
  CHECK(d.evaluation_pool().size() == 1);
}

TEST_CASE("jsonl round trip") {
  const auto ds = generate_synthetic({});
  CHECK(parse_jsonl(to_jsonl(ds), JsonlSchema{.labels = ds.labels, .positive_label = ds.positive_label}) == ds);
}

TEST_CASE("vocabulary") {
  const auto ds = toy_dataset();
  const std::vector<std::string> a{"a"};
  SUBCASE("min_freq threshold") {
    const auto v = build_vocabulary(ds, a, 2);
    REQUIRE(v.size() == Vocabulary::kNumSpecial + 1);
    CHECK(v.token(Vocabulary::kNumSpecial) == "x");
  }
  SUBCASE("min_freq 1 keeps everything, frequency then lexicographic order") {
    const auto v = build_vocabulary(ds, a, 1);
    REQUIRE(v.size() == Vocabulary::kNumSpecial + 3);
    CHECK(v.token(6) == "x");
    CHECK(v.token(7) == "y");
    CHECK(v.token(8) == "z");
  }
  SUBCASE("specials occupy fixed low ids") {
    const Vocabulary v;
    CHECK(v.id("<pad>") == Vocabulary::kPad);
    CHECK(v.id("<unk>") == Vocabulary::kUnk);
    CHECK(v.id("<s>") == Vocabulary::kBos);
    CHECK(v.id("</s>") == Vocabulary::kEos);
    CHECK(v.id("<sep>") == Vocabulary::kSep);
    CHECK(v.id("never-seen") == Vocabulary::kUnk);
  }
  SUBCASE("only source training text is observed") {
    const std::vector<std::string> ab{"a", "b"};
    const auto v = build_vocabulary(ds, ab, 1);
    CHECK(v.contains("q"));
    CHECK_FALSE(v.contains("secret"));
  }
  SUBCASE("no source training examples") {
    const std::vector<std::string> none;
    CHECK_THROWS_AS(build_vocabulary(ds, none, 1), Error);
  }
}

TEST_CASE("removing the target leaves source artifacts unchanged") {
  const auto ds = generate_synthetic({});
  for (const auto& setting : make_loo_settings(ds)) {
    MultiDomainDataset without = ds;
    std::erase_if(without.domains, [&](const DomainSplits& d) { return d.name == setting.target; });
    CHECK(build_vocabulary(ds, setting.sources) == build_vocabulary(without, setting.sources));
  }
}

TEST_CASE("leave-one-out settings") {
  SyntheticSpec spec;
  spec.num_domains = 5;
  spec.examples_per_domain = 10;
  const auto five = make_loo_settings(generate_synthetic(spec));
  REQUIRE(five.size() == 5);
  std::set<std::string> targets;
  for (const auto& s : five) {
    CHECK(s.sources.size() == 4);
    CHECK(std::find(s.sources.begin(), s.sources.end(), s.target) == s.sources.end());
    targets.insert(s.target);
  }
  CHECK(targets.size() == 5);

  spec.num_domains = 2;
  const auto two = make_loo_settings(generate_synthetic(spec));
  REQUIRE(two.size() == 2);
  CHECK(two[0] == LeaveOneOutSetting{"airlines", {"restaurants"}});
  CHECK(two[1] == LeaveOneOutSetting{"restaurants", {"airlines"}});

  spec.num_domains = 1;
  CHECK_THROWS_AS(make_loo_settings(generate_synthetic(spec)), Error);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  CHECK(to_jsonl(generate_synthetic(spec)) == to_jsonl(generate_synthetic(spec)));

  spec.num_domains = 3;
  spec.examples_per_domain = 100;
  const auto ds = generate_synthetic(spec);
  REQUIRE(ds.domains.size() == 3);
  for (const auto& d : ds.domains) {
    CHECK(d.train.size() == 80);
    CHECK(d.dev.size() == 20);
  }

  // Domain-indicative words carry the domain stem; pools are pairwise disjoint.
  std::vector<std::set<std::string>> pools;
  for (const auto& d : ds.domains) {
    std::set<std::string> pool;
    for (const auto* split : {&d.train, &d.dev}) {
      for (const auto& ex : *split) {
        for (const auto& t : tokenize(ex.text)) {
          if (t.starts_with(d.name)) pool.insert(t);
        }
      }
    }
    CHECK_FALSE(pool.empty());
    pools.push_back(pool);
  }
  for (std::size_t i = 0; i < pools.size(); ++i) {
    for (std::size_t j = i + 1; j < pools.size(); ++j) {
      std::vector<std::string> common;
      std::set_intersection(pools[i].begin(), pools[i].end(), pools[j].begin(), pools[j].end(),
                            std::back_inserter(common));
      CHECK(common.empty());
    }
  }

  spec.examples_per_domain = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
}

TEST_CASE("family lexicon labels follow the cue majority") {
  const auto ds = generate_synthetic({});
  for (const auto& d : ds.domains) {
    for (const auto& ex : d.train) {
      int good = 0, bad = 0;
      for (const auto& t : tokenize(ex.text)) {
        if (!t.starts_with("family")) continue;
        (t.find("good") != std::string::npos ? good : bad) += 1;
      }
      CHECK(good + bad == 3);
      CHECK(ex.label == (good > bad ? "pos" : "neg"));
    }
  }
}

}  // namespace pada
