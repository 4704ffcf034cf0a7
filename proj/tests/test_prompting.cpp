#include <doctest.h>

#include <string>
#include <vector>

#include "mofa/catalog.hpp"
#include "mofa/errors.hpp"
#include "mofa/prompting.hpp"
#include "mofa/selection.hpp"

using namespace mofa;

namespace {

FeatureCatalog small_catalog() {
  FeatureCatalog catalog;
  FeatureRecord a;
  a.name = "age_bucket";
  a.description = "user age bucketed into 5-year ranges";
  a.group = "g_user";
  a.category = FeatureCategory::sparse;
  a.metadata["importance"] = 0.9;
  catalog.add(a);
  FeatureRecord b;
  b.name = "p_click";
  b.description = "predicted click probability from the upstream ranker";
  b.group = "g_model";
  b.metadata["importance"] = 0.5;
  b.metadata["corr_label"] = 0.31;
  catalog.add(b);
  FeatureRecord c;
  c.name = "session_len";
  c.description = "mean session length over the trailing week";
  catalog.add(c);
  return catalog;
}

SelectionConfig basic_config() {
  SelectionConfig config;
  config.target_k = 2;
  config.objective = "Pick features for click prediction.";
  return config;
}

}  // namespace

TEST_CASE("empty selection renders the placeholder") {
  auto catalog = small_catalog();
  auto config = basic_config();
  SelectionState state;
  state.available = catalog.names();
  auto prompt = build_prompt(state, catalog, config);
  CHECK(prompt.selected_block.find("(none selected yet)") != std::string::npos);
  CHECK(prompt.rendered.find("(none selected yet)") != std::string::npos);
}

TEST_CASE("candidate lines carry metadata as sorted key=value pairs") {
  auto catalog = small_catalog();
  auto config = basic_config();
  SelectionState state;
  state.available = catalog.names();
  auto prompt = build_prompt(state, catalog, config);
  CHECK(prompt.candidate_block.find("importance=0.9") != std::string::npos);
  CHECK(prompt.candidate_block.find("group=g_user") != std::string::npos);
  CHECK(prompt.candidate_block.find("category=sparse") != std::string::npos);
  // corr_label sorts before importance
  auto line_start = prompt.candidate_block.find("- p_click");
  auto corr_pos = prompt.candidate_block.find("corr_label=0.31", line_start);
  auto imp_pos = prompt.candidate_block.find("importance=0.5", line_start);
  CHECK(corr_pos != std::string::npos);
  CHECK(imp_pos != std::string::npos);
  CHECK(corr_pos < imp_pos);
}

TEST_CASE("group consolidation requirement lands in the requirements block") {
  auto catalog = small_catalog();
  auto config = basic_config();
  config.requirements.push_back(make_group_consolidation_requirement());
  SelectionState state;
  state.available = catalog.names();
  auto prompt = build_prompt(state, catalog, config);
  CHECK(prompt.requirements_block.find(
            make_group_consolidation_requirement().text) !=
        std::string::npos);
  CHECK(prompt.rendered.find("Auxiliary requirements") != std::string::npos);
}

TEST_CASE("requirements section is omitted when empty") {
  auto catalog = small_catalog();
  auto config = basic_config();
  SelectionState state;
  state.available = catalog.names();
  auto prompt = build_prompt(state, catalog, config);
  CHECK(prompt.requirements_block.empty());
  CHECK(prompt.rendered.find("Auxiliary requirements") == std::string::npos);
  CHECK(prompt.rendered.find("\n\n\n") == std::string::npos);
}

TEST_CASE("sections appear in the contract order") {
  auto catalog = small_catalog();
  auto config = basic_config();
  config.requirements.push_back({RequirementKind::free_text, "stay cheap"});
  SelectionState state;
  state.selected = {"age_bucket"};
  state.available = {"p_click", "session_len"};
  auto prompt = build_prompt(state, catalog, config);
  auto obj = prompt.rendered.find("## Task");
  auto req = prompt.rendered.find("## Auxiliary requirements");
  auto sel = prompt.rendered.find("## Currently selected features (1)");
  auto cand = prompt.rendered.find("## Candidate features (2)");
  auto fmt = prompt.rendered.find("## Output format");
  REQUIRE(obj != std::string::npos);
  REQUIRE(req != std::string::npos);
  REQUIRE(sel != std::string::npos);
  REQUIRE(cand != std::string::npos);
  REQUIRE(fmt != std::string::npos);
  CHECK(obj < req);
  CHECK(req < sel);
  CHECK(sel < cand);
  CHECK(cand < fmt);
  // Closing instruction quotes the exact expected output line.
  CHECK(prompt.rendered.find("Selected Feature: <name>, Reason: "
                             "<one-line justification>") != std::string::npos);
}

TEST_CASE("descriptions are truncated with a visible marker") {
  FeatureCatalog catalog;
  FeatureRecord rec;
  rec.name = "long";
  rec.description = std::string(500, 'x');
  catalog.add(rec);
  auto config = basic_config();
  config.max_desc_chars = 40;
  SelectionState state;
  state.available = {"long"};
  auto prompt = build_prompt(state, catalog, config);
  CHECK(prompt.candidate_block.find(std::string(40, 'x') + "...") !=
        std::string::npos);
  CHECK(prompt.candidate_block.find(std::string(41, 'x')) ==
        std::string::npos);

  std::string line = render_feature_line(rec, 40);
  CHECK(line.size() <= 2 + rec.name.size() + 2 + 40 + 3);
}

TEST_CASE("prompt rendering is deterministic and complete") {
  auto catalog = small_catalog();
  auto config = basic_config();
  SelectionState state;
  state.selected = {"p_click"};
  state.available = {"age_bucket", "session_len"};
  auto first = build_prompt(state, catalog, config);
  auto second = build_prompt(state, catalog, config);
  CHECK(first.rendered == second.rendered);
  CHECK(first.token_estimate == first.rendered.size() / 4);

  for (const auto& name : state.available) {
    std::size_t pos = first.candidate_block.find("- " + name + ":");
    CHECK(pos != std::string::npos);
    CHECK(first.candidate_block.find("- " + name + ":", pos + 1) ==
          std::string::npos);
  }
  CHECK(first.selected_block.find("- p_click:") != std::string::npos);
}

TEST_CASE("template override replaces placeholders") {
  auto catalog = small_catalog();
  auto config = basic_config();
  SelectionState state;
  state.available = catalog.names();
  PromptOptions options;
  options.template_text =
      "PREFIX\n{candidates}\n{objective}\n{format_instruction}\n";
  auto prompt = build_prompt(state, catalog, config, options);
  CHECK(prompt.rendered.rfind("PREFIX", 0) == 0);
  CHECK(prompt.rendered.find("## Candidate features") <
        prompt.rendered.find("## Task"));
}

TEST_CASE("golden: default prompt layout for a tiny state") {
  FeatureCatalog catalog;
  FeatureRecord a;
  a.name = "a";
  a.description = "first";
  a.metadata["importance"] = 0.9;
  catalog.add(a);
  FeatureRecord b;
  b.name = "b";
  b.description = "second";
  catalog.add(b);
  SelectionConfig config;
  config.target_k = 1;
  config.objective = "obj text";
  SelectionState state;
  state.available = {"a", "b"};

  std::string expected =
      "## Task\n"
      "obj text\n"
      "\n"
      "## Currently selected features (0)\n"
      "(none selected yet)\n"
      "\n"
      "## Candidate features (2)\n"
      "- a: first [importance=0.9]\n"
      "- b: second\n"
      "\n"
      "## Output format\n"
      "Reason briefly if needed, then end your reply with exactly one line "
      "in the form:\n"
      "Selected Feature: <name>, Reason: <one-line justification>\n"
      "The feature name must exactly match one of the candidate features "
      "listed above.\n";
  CHECK(build_prompt(state, catalog, config).rendered == expected);
}

TEST_CASE("parse_decision round-trips every candidate") {
  std::vector<std::string> candidates = {"age_bucket", "p_click",
                                         "session_len", "Feat.With-Dots"};
  std::vector<std::string> reasons = {
      "strongest correlation with clicks",
      "cheap to serve",
      "covers the long tail; low redundancy",
  };
  for (const auto& name : candidates) {
    for (const auto& reason : reasons) {
      auto decision = parse_decision(
          "Selected Feature: " + name + ", Reason: " + reason, candidates);
      CHECK(decision.feature_name == name);
      CHECK(decision.reason == reason);
    }
  }
}

TEST_CASE("parse_decision examples from the contract") {
  std::vector<std::string> candidates = {"age_bucket", "p_click"};
  auto d = parse_decision(
      "Selected Feature: age_bucket, Reason: strongest correlation with "
      "clicks",
      candidates);
  CHECK(d.feature_name == "age_bucket");
  CHECK(d.reason == "strongest correlation with clicks");

  // Preamble reasoning does not confuse the parser; it keys on the last line.
  auto with_preamble = parse_decision(
      "Let me think.\nage_bucket is tempting but p_click is stronger.\n"
      "Selected Feature: p_click, Reason: direct signal",
      candidates);
  CHECK(with_preamble.feature_name == "p_click");
  CHECK(with_preamble.reason == "direct signal");

  try {
    parse_decision("Selected Feature: not_a_feature, Reason: x", candidates);
    FAIL("expected UnknownFeatureName");
  } catch (const Error& e) {
    CHECK(e.code() == "UnknownFeatureName");
  }
}

TEST_CASE("parse_decision tolerates casing drift and decorations") {
  std::vector<std::string> candidates = {"age_bucket", "p_click"};
  auto d1 = parse_decision("selected feature: AGE_BUCKET, reason: drift",
                           candidates);
  CHECK(d1.feature_name == "age_bucket");
  auto d2 = parse_decision(
      "Selected Feature: `p_click`, Reason: formatted with backticks",
      candidates);
  CHECK(d2.feature_name == "p_click");
  auto d3 = parse_decision("Selected Feature: **p_click**, Reason: bold",
                           candidates);
  CHECK(d3.feature_name == "p_click");
}

TEST_CASE("parse_decision reads the reason from the following line") {
  std::vector<std::string> candidates = {"a", "b"};
  auto d = parse_decision("Selected Feature: b\nReason: next line works",
                          candidates);
  CHECK(d.feature_name == "b");
  CHECK(d.reason == "next line works");
}

TEST_CASE("parse_decision takes the last qualifying line") {
  std::vector<std::string> candidates = {"a", "b"};
  auto d = parse_decision(
      "Selected Feature: a, Reason: first draft\n"
      "On reflection:\n"
      "Selected Feature: b, Reason: final answer",
      candidates);
  CHECK(d.feature_name == "b");
  CHECK(d.reason == "final answer");
}

TEST_CASE("parse_decision failure modes") {
  std::vector<std::string> candidates = {"a", "b", "A"};
  try {
    parse_decision("no decision here at all", candidates);
    FAIL("expected NoDecisionFound");
  } catch (const Error& e) {
    CHECK(e.code() == "NoDecisionFound");
  }

  // Decision line without any reason: not a qualifying line.
  CHECK_THROWS_AS(parse_decision("Selected Feature: a", candidates), Error);

  // "a" matches both "a" (exactly) -- exact wins over case-folded "A".
  auto exact = parse_decision("Selected Feature: a, Reason: r", candidates);
  CHECK(exact.feature_name == "a");

  // "B" has a unique case-insensitive match.
  auto folded = parse_decision("Selected Feature: B, Reason: r", candidates);
  CHECK(folded.feature_name == "b");

  // Ambiguity between "a" and "A" under case folding, with no exact match.
  std::vector<std::string> ambiguous = {"cap", "CAP"};
  try {
    parse_decision("Selected Feature: Cap, Reason: r", ambiguous);
    FAIL("expected AmbiguousMatch");
  } catch (const Error& e) {
    CHECK(e.code() == "AmbiguousMatch");
  }
}
