#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mofa/catalog.hpp"
#include "mofa/errors.hpp"
#include "mofa/llm_client.hpp"
#include "mofa/selection.hpp"
#include "oracles.hpp"

using namespace mofa;

namespace {

FeatureCatalog catalog_with_importances(
    const std::map<std::string, double>& importances,
    const std::map<std::string, std::string>& groups = {}) {
  FeatureCatalog catalog;
  for (const auto& [name, importance] : importances) {
    FeatureRecord rec;
    rec.name = name;
    rec.description = "feature " + name;
    rec.metadata["importance"] = importance;
    auto git = groups.find(name);
    if (git != groups.end()) rec.group = git->second;
    catalog.add(rec);
  }
  return catalog;
}

SelectionConfig mock_config(std::size_t k = 1) {
  SelectionConfig config;
  config.target_k = k;
  config.backend.kind = BackendKind::mock_importance;
  return config;
}

// Backend that must never be consulted.
struct ExplodingBackend : SelectorBackend {
  std::string complete(const PromptContext&, const SelectionView&) override {
    throw InternalError("BackendInvoked", "backend must not be called");
  }
  bool is_deterministic() const override { return true; }
};

}  // namespace

TEST_CASE("single remaining candidate is a forced move for any backend") {
  auto catalog = catalog_with_importances({{"a", 0.1}});
  auto config = mock_config();
  SelectionState state;
  state.available = {"a"};
  ExplodingBackend backend;
  auto next = select_step(state, catalog, config, backend);
  REQUIRE(next.selected == std::vector<std::string>{"a"});
  CHECK(next.available.empty());
  REQUIRE(next.trace.size() == 1);
  CHECK(next.trace[0].chosen == "a");
  CHECK(next.trace[0].reason == kForcedMoveReason);
  CHECK(next.trace[0].retries == 0);
}

TEST_CASE("importance mock picks the argmax of two") {
  auto catalog = catalog_with_importances({{"a", 0.9}, {"b", 0.5}});
  auto config = mock_config();
  SelectionState state;
  state.available = {"a", "b"};
  ImportanceMockBackend backend(config.backend);
  auto next = select_step(state, catalog, config, backend);
  CHECK(next.selected == std::vector<std::string>{"a"});
  CHECK(next.trace[0].reason == "highest importance among candidates");
}

TEST_CASE("select_step does not mutate its inputs") {
  auto catalog = catalog_with_importances({{"a", 0.9}, {"b", 0.5}});
  auto config = mock_config();
  SelectionState state;
  state.available = {"a", "b"};
  ImportanceMockBackend backend(config.backend);
  auto copy_before = state;
  (void)select_step(state, catalog, config, backend);
  CHECK(state.selected == copy_before.selected);
  CHECK(state.available == copy_before.available);
  CHECK(state.trace.size() == copy_before.trace.size());
}

TEST_CASE("five steps visit features in descending importance order") {
  std::map<std::string, double> importances = {
      {"v", 0.31}, {"w", 0.92}, {"x", 0.55}, {"y", 0.78}, {"z", 0.04}};
  auto catalog = catalog_with_importances(importances);
  auto config = mock_config(5);
  ImportanceMockBackend backend(config.backend);
  auto state = run_phase(catalog.names(), 5, catalog, config, backend);

  auto expected = oracle::top_k_by_importance(catalog, catalog.names(), 5);
  std::vector<std::string> chosen;
  for (const auto& rec : state.trace) chosen.push_back(rec.chosen);
  CHECK(chosen == expected);
}

TEST_CASE("run_phase with target equal to pool size permutes the pool") {
  auto catalog = catalog_with_importances({{"a", 1}, {"b", 2}, {"c", 3}});
  auto config = mock_config(3);
  ExplodingBackend backend;  // forced moves skip the backend entirely
  auto state = run_phase({"c", "a", "b"}, 3, catalog, config, backend);
  CHECK(state.selected == std::vector<std::string>{"c", "a", "b"});
  CHECK(state.trace.size() == 3);
  for (const auto& rec : state.trace) CHECK(rec.reason == kForcedMoveReason);
}

TEST_CASE("run_phase with target zero selects nothing") {
  auto catalog = catalog_with_importances({{"a", 1}});
  auto config = mock_config(1);
  ExplodingBackend backend;
  auto state = run_phase({"a"}, 0, catalog, config, backend);
  CHECK(state.selected.empty());
  CHECK(state.trace.empty());
  CHECK(state.available == std::vector<std::string>{"a"});
}

TEST_CASE("run_phase rejects oversized targets and duplicates") {
  auto catalog = catalog_with_importances({{"a", 1}, {"b", 2}});
  auto config = mock_config(1);
  ExplodingBackend backend;
  CHECK_THROWS_AS(run_phase({"a"}, 2, catalog, config, backend), ConfigError);
  CHECK_THROWS_AS(run_phase({"a", "a"}, 1, catalog, config, backend),
                  DataError);
  CHECK_THROWS_AS(run_phase({"missing"}, 1, catalog, config, backend),
                  DataError);
}

TEST_CASE("twenty candidates, target seven: traces are byte-identical") {
  std::map<std::string, double> importances;
  for (int i = 0; i < 20; ++i)
    importances["f" + std::to_string(i)] = 0.01 * i * i - 0.3 * i + 2.0;
  auto catalog = catalog_with_importances(importances);
  auto config = mock_config(7);
  config.seed = 1234;
  ImportanceMockBackend backend(config.backend);
  auto first = run_phase(catalog.names(), 7, catalog, config, backend);
  auto second = run_phase(catalog.names(), 7, catalog, config, backend);
  CHECK(serialize_trace(first.trace, true) ==
        serialize_trace(second.trace, true));
}

TEST_CASE("conservation and legality hold along a full run") {
  std::map<std::string, double> importances;
  for (int i = 0; i < 12; ++i)
    importances["f" + std::to_string(i)] = (i * 37 % 11) / 10.0;
  auto catalog = catalog_with_importances(importances);
  auto config = mock_config(9);
  ImportanceMockBackend backend(config.backend);

  auto universe = catalog.names();
  std::multiset<std::string> expected(universe.begin(), universe.end());
  SelectionState state;
  state.available = universe;
  std::set<std::string> seen;
  for (int t = 0; t < 9; ++t) {
    state = select_step(state, catalog, config, backend);
    std::multiset<std::string> current(state.selected.begin(),
                                       state.selected.end());
    current.insert(state.available.begin(), state.available.end());
    CHECK(current == expected);
    CHECK(state.selected.size() == static_cast<std::size_t>(t + 1));
    const auto& chosen = state.trace.back().chosen;
    CHECK(seen.insert(chosen).second);  // never chosen before
    CHECK(std::find(state.available.begin(), state.available.end(), chosen) ==
          state.available.end());
  }
}

TEST_CASE("replaying a trace prefix reproduces the suffix") {
  std::map<std::string, double> importances;
  for (int i = 0; i < 10; ++i)
    importances["f" + std::to_string(i)] = ((i * 7919) % 97) / 97.0;
  auto catalog = catalog_with_importances(importances);
  auto config = mock_config(8);
  ImportanceMockBackend backend(config.backend);
  auto universe = catalog.names();
  auto full = run_phase(universe, 8, catalog, config, backend);

  const std::size_t cut = 3;
  SelectionState replay;
  replay.selected.assign(full.selected.begin(), full.selected.begin() + cut);
  for (const auto& name : universe) {
    if (std::find(replay.selected.begin(), replay.selected.end(), name) ==
        replay.selected.end())
      replay.available.push_back(name);
  }
  for (std::size_t t = cut; t < 8; ++t)
    replay = select_step(replay, catalog, config, backend);
  for (std::size_t t = cut; t < 8; ++t)
    CHECK(replay.selected[t] == full.selected[t]);
}

TEST_CASE("run_phase returns exactly the top-K importances") {
  std::map<std::string, double> importances;
  for (int i = 0; i < 30; ++i)
    importances["feat" + std::to_string(i)] =
        0.001 * ((i * 131) % 1000);  // all distinct
  auto catalog = catalog_with_importances(importances);
  auto config = mock_config(11);
  ImportanceMockBackend backend(config.backend);
  auto state = run_phase(catalog.names(), 11, catalog, config, backend);
  CHECK(state.selected ==
        oracle::top_k_by_importance(catalog, catalog.names(), 11));
}

TEST_CASE("unparseable output is retried and the count recorded") {
  auto catalog = catalog_with_importances({{"a", 1}, {"b", 2}});
  auto config = mock_config(1);
  SelectionState state;
  state.available = {"a", "b"};

  ScriptedBackend backend(
      {"garbage", "Selected Feature: b, Reason: ok"});
  auto next = select_step(state, catalog, config, backend);
  CHECK(next.selected == std::vector<std::string>{"b"});
  CHECK(next.trace[0].retries == 1);
  CHECK(next.trace[0].reason == "ok");

  // A feature outside the available set follows the same retry path.
  ScriptedBackend hallucinating(
      {"Selected Feature: ghost, Reason: not real",
       "Selected Feature: a, Reason: second try"});
  auto recovered = select_step(state, catalog, config, hallucinating);
  CHECK(recovered.selected == std::vector<std::string>{"a"});
  CHECK(recovered.trace[0].retries == 1);
}

TEST_CASE("after the retry limit the step fails with UnparseableResponse") {
  auto catalog = catalog_with_importances({{"a", 1}, {"b", 2}});
  auto config = mock_config(1);
  SelectionState state;
  state.available = {"a", "b"};
  // 1 initial attempt + kParseRetryLimit re-prompts, all garbage.
  std::vector<std::string> lines(1 + kParseRetryLimit, "nope");
  lines.push_back("Selected Feature: a, Reason: too late");
  ScriptedBackend backend(lines);
  try {
    select_step(state, catalog, config, backend);
    FAIL("expected UnparseableResponse");
  } catch (const Error& e) {
    CHECK(e.code() == "UnparseableResponse");
    CHECK(e.error_class() == ErrorClass::backend);
  }
}

TEST_CASE("corrective instruction is appended to the re-prompt") {
  auto catalog = catalog_with_importances({{"a", 1}, {"b", 2}});
  auto config = mock_config(1);
  SelectionState state;
  state.available = {"a", "b"};

  struct RecordingBackend : SelectorBackend {
    std::vector<std::string> prompts;
    std::string complete(const PromptContext& prompt,
                         const SelectionView&) override {
      prompts.push_back(prompt.rendered);
      if (prompts.size() == 1) return "???";
      return "Selected Feature: a, Reason: fixed";
    }
    bool is_deterministic() const override { return true; }
  } backend;

  auto next = select_step(state, catalog, config, backend);
  CHECK(next.trace[0].retries == 1);
  REQUIRE(backend.prompts.size() == 2);
  CHECK(backend.prompts[0].find("could not be parsed") == std::string::npos);
  CHECK(backend.prompts[1].find("could not be parsed") != std::string::npos);
  CHECK(backend.prompts[1].rfind(backend.prompts[0], 0) == 0);  // prefix
}

TEST_CASE("group-aware mock prefers groups already in the selection") {
  std::map<std::string, double> importances = {
      {"in_a", 0.9}, {"in_b", 0.2}, {"out_c", 0.8}};
  std::map<std::string, std::string> groups = {
      {"in_a", "g1"}, {"in_b", "g1"}, {"out_c", "g2"}};
  auto catalog = catalog_with_importances(importances, groups);

  SelectionConfig config = mock_config(2);
  ImportanceMockBackend backend(config.backend);

  SelectionState state;
  state.selected = {"in_a"};
  state.available = {"in_b", "out_c"};

  // Without the requirement: plain importance argmax.
  auto plain = select_step(state, catalog, config, backend);
  CHECK(plain.selected.back() == "out_c");

  // With it: the g1 candidate wins despite lower importance.
  config.requirements.push_back(make_group_consolidation_requirement());
  auto grouped = select_step(state, catalog, config, backend);
  CHECK(grouped.selected.back() == "in_b");
  CHECK(grouped.trace.back().reason.find("g1") != std::string::npos);
}

TEST_CASE("trace serialization shape") {
  StepRecord rec;
  rec.step = 3;
  rec.chosen = "x";
  rec.reason = "r";
  rec.raw_response = "raw";
  rec.retries = 1;
  CHECK(serialize_trace({rec}, false) ==
        "{\"step\":3,\"chosen\":\"x\",\"reason\":\"r\",\"retries\":1}\n");
  CHECK(serialize_trace({rec}, true) ==
        "{\"step\":3,\"chosen\":\"x\",\"reason\":\"r\",\"retries\":1,"
        "\"raw_response\":\"raw\"}\n");
}

TEST_CASE("config validation rejects bad bounds") {
  SelectionConfig config;
  config.target_k = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.target_k = 5;
  config.oversample_factor = 0.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.oversample_factor = 1.5;
  config.requirements.push_back({RequirementKind::free_text, "  "});
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
