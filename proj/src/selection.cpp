#include "mofa/selection.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mofa/errors.hpp"
#include "mofa/prompting.hpp"
#include "mofa/util.hpp"

namespace mofa {

using ordered_json = nlohmann::ordered_json;

Requirement make_group_consolidation_requirement() {
  return Requirement{
      RequirementKind::group_consolidation,
      "Prefer candidates whose feature group is already represented in the "
      "selected set; keep the number of distinct feature groups as small as "
      "possible."};
}

bool has_group_consolidation(const std::vector<Requirement>& requirements) {
  return std::any_of(requirements.begin(), requirements.end(),
                     [](const Requirement& r) {
                       return r.kind == RequirementKind::group_consolidation;
                     });
}

void SelectionConfig::validate() const {
  if (target_k == 0)
    throw ConfigError("InvalidTarget", "target_k must be positive");
  if (buckets == 0)
    throw ConfigError("InvalidBuckets", "buckets must be >= 1");
  if (oversample_factor < 1.0)
    throw ConfigError("InvalidFactor", "oversample_factor must be >= 1, got " +
                                           format_number(oversample_factor));
  if (max_desc_chars == 0)
    throw ConfigError("InvalidConfig", "max_desc_chars must be positive");
  if (backend.temperature < 0.0)
    throw ConfigError("InvalidConfig", "temperature must be >= 0");
  if (backend.max_retries < 0)
    throw ConfigError("InvalidConfig", "max_retries must be >= 0");
  for (const auto& req : requirements) {
    if (trim(req.text).empty())
      throw ConfigError("InvalidConfig", "requirement text must be non-empty");
  }
}

namespace {

bool is_parse_failure(const Error& e) {
  return e.code() == "NoDecisionFound" || e.code() == "UnknownFeatureName" ||
         e.code() == "AmbiguousMatch";
}

void apply_move(SelectionState& state, const std::string& chosen,
                std::string reason, std::string raw_response, int retries) {
  auto it = std::find(state.available.begin(), state.available.end(), chosen);
  if (it == state.available.end())
    throw InternalError("IllegalMove", "chosen feature not available: " + chosen);
  state.available.erase(it);
  state.selected.push_back(chosen);
  StepRecord rec;
  rec.step = state.selected.size();
  rec.chosen = chosen;
  rec.reason = std::move(reason);
  rec.raw_response = std::move(raw_response);
  rec.retries = retries;
  state.trace.push_back(std::move(rec));
}

}  // namespace

SelectionState select_step(const SelectionState& state,
                           const FeatureCatalog& catalog,
                           const SelectionConfig& config,
                           SelectorBackend& backend) {
  if (state.available.empty())
    throw InternalError("EmptyCandidates", "no candidates left to select from");
  for (const auto& name : state.available) catalog.at(name);

  SelectionState next = state;

  if (state.available.size() == 1) {
    // Only one legal move; the backend has nothing to decide.
    apply_move(next, state.available[0], kForcedMoveReason, "", 0);
    return next;
  }

  PromptContext prompt = build_prompt(state, catalog, config);
  SelectionView view{catalog, config, state.selected, state.available};
  for (int attempt = 0;; ++attempt) {
    std::string raw = backend.complete(prompt, view);
    try {
      ParsedDecision decision = parse_decision(raw, state.available);
      apply_move(next, decision.feature_name, decision.reason, raw, attempt);
      return next;
    } catch (const Error& e) {
      if (!is_parse_failure(e)) throw;
      if (attempt >= kParseRetryLimit)
        throw BackendError("UnparseableResponse",
                           "backend output unparseable after " +
                               std::to_string(kParseRetryLimit) +
                               " re-prompts: " + e.what());
      prompt.rendered += "\n\n" + corrective_instruction();
      prompt.token_estimate = prompt.rendered.size() / 4;
    }
  }
}

SelectionState run_phase(const std::vector<std::string>& candidates,
                         std::size_t phase_target,
                         const FeatureCatalog& catalog,
                         const SelectionConfig& config,
                         SelectorBackend& backend) {
  if (phase_target > candidates.size())
    throw ConfigError("TargetExceedsPool",
                      "phase target " + std::to_string(phase_target) +
                          " exceeds candidate pool of " +
                          std::to_string(candidates.size()));
  std::unordered_set<std::string> seen;
  for (const auto& name : candidates) {
    catalog.at(name);
    if (!seen.insert(name).second)
      throw DataError("DuplicateName", "duplicate candidate: " + name);
  }

  SelectionState state;
  state.available = candidates;
  while (state.selected.size() < phase_target) {
    std::size_t remaining = phase_target - state.selected.size();
    if (remaining == state.available.size()) {
      // Every remaining candidate must be taken; skip the backend entirely.
      std::vector<std::string> rest = state.available;
      for (const auto& name : rest)
        apply_move(state, name, kForcedMoveReason, "", 0);
      break;
    }
    state = select_step(state, catalog, config, backend);
  }
  return state;
}

std::string serialize_trace(const std::vector<StepRecord>& trace,
                            bool verbose) {
  std::string out;
  for (const auto& rec : trace) {
    ordered_json j;
    j["step"] = rec.step;
    j["chosen"] = rec.chosen;
    j["reason"] = rec.reason;
    j["retries"] = rec.retries;
    if (verbose) j["raw_response"] = rec.raw_response;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace mofa
