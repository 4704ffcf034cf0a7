#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mofa/backend.hpp"
#include "mofa/catalog.hpp"

namespace mofa {

enum class RequirementKind { group_consolidation, capacity_note, free_text };

struct Requirement {
  RequirementKind kind = RequirementKind::free_text;
  std::string text;
};

// Stock instruction used when `--requirements group-consolidation` is given
// without custom text.
Requirement make_group_consolidation_requirement();

bool has_group_consolidation(const std::vector<Requirement>& requirements);

struct SelectionConfig {
  std::size_t target_k = 0;
  std::size_t buckets = 1;
  double oversample_factor = 1.5;
  std::string objective =
      "Select the feature subset that maximizes downstream binary "
      "classification performance.";
  std::vector<Requirement> requirements;
  BackendConfig backend;
  std::uint64_t seed = 0;
  std::size_t max_desc_chars = 240;
  std::size_t workers = 0;  // 0 = one worker per bucket, capped at hw threads
  bool verbose_trace = false;
  std::string prompt_template;  // empty = built-in default template

  // Throws ConfigError on violated bounds (factor < 1, buckets = 0, ...).
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  std::string chosen;
  std::string reason;
  std::string raw_response;
  int retries = 0;
};

struct SelectionState {
  std::vector<std::string> selected;
  std::vector<std::string> available;
  std::vector<StepRecord> trace;
};

// One greedy step: exactly one name moves from available to selected and the
// trace grows by one record. Inputs are untouched; the successor state is
// returned. Unparseable backend output is re-prompted with a corrective
// instruction up to kParseRetryLimit times, then UnparseableResponse.
SelectionState select_step(const SelectionState& state,
                           const FeatureCatalog& catalog,
                           const SelectionConfig& config,
                           SelectorBackend& backend);

inline constexpr int kParseRetryLimit = 3;

// Reason recorded when the remaining candidates exactly fill the remaining
// quota and the backend is skipped.
inline constexpr const char* kForcedMoveReason =
    "forced move: remaining candidates equal remaining slots";

// Runs select_step until |selected| == phase_target. Candidates must be
// distinct and resolvable in the catalog. When the target equals the pool
// size every move is forced and the backend is never invoked.
SelectionState run_phase(const std::vector<std::string>& candidates,
                         std::size_t phase_target,
                         const FeatureCatalog& catalog,
                         const SelectionConfig& config,
                         SelectorBackend& backend);

// JSONL, one StepRecord per line. raw_response only when verbose.
std::string serialize_trace(const std::vector<StepRecord>& trace,
                            bool verbose);

}  // namespace mofa
