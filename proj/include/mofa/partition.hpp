#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mofa/catalog.hpp"
#include "mofa/selection.hpp"

namespace mofa {

struct BucketPlan {
  // Pairwise disjoint, union = input universe, sizes differ by at most 1.
  std::vector<std::vector<std::string>> buckets;
  std::size_t per_bucket_target = 0;  // K'; filled in by run_pipeline
};

// Seeded uniform shuffle followed by round-robin assignment.
BucketPlan make_buckets(const std::vector<std::string>& names, std::size_t b,
                        std::uint64_t seed);

// ceil(factor * k / b). Strictly greater than k/b whenever factor > 1.
std::size_t compute_phase1_target(std::size_t k, std::size_t b, double factor);

struct PipelineResult {
  BucketPlan plan;
  std::vector<SelectionState> phase1_states;  // one per bucket
  std::vector<std::string> refined_pool;      // concatenated phase-1 picks
  SelectionState final_state;
  std::vector<std::string> final_selected;    // exactly K names
};

// Two-phase selection: per-bucket runs to K' each (concurrently, up to the
// worker limit), merge, then one global run down to K. Phase errors are
// rethrown with the failing bucket named.
PipelineResult run_pipeline(const FeatureCatalog& catalog,
                            const SelectionConfig& config,
                            SelectorBackend& backend);

// Full pipeline document embedding every trace.
std::string pipeline_to_json(const PipelineResult& result,
                             const SelectionConfig& config);

}  // namespace mofa
