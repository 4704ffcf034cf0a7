#pragma once

#include <string>
#include <vector>

#include "mofa/catalog.hpp"
#include "mofa/selection.hpp"

namespace mofa {

struct PromptContext {
  std::string objective_text;
  std::string selected_block;
  std::string candidate_block;
  std::string requirements_block;  // empty when no requirements
  std::string rendered;
  std::size_t token_estimate = 0;  // chars/4; advisory only, never truncates
};

struct ParsedDecision {
  std::string feature_name;
  std::string reason;
};

// Placeholders: {objective} {requirements} {selected} {candidates}
// {format_instruction}. The default template is pinned by golden tests.
std::string default_prompt_template();

std::string render_template(const std::string& tmpl,
                            const PromptContext& context);

// Exact output line the model is instructed to produce, quoted verbatim in
// every prompt's closing section.
std::string format_instruction();

// Appended when a reply could not be parsed and the step is retried.
std::string corrective_instruction();

struct PromptOptions {
  std::string template_text;  // empty = default template
};

PromptContext build_prompt(const SelectionState& state,
                           const FeatureCatalog& catalog,
                           const SelectionConfig& config,
                           const PromptOptions& options = {});

// One feature line as it appears in the selected/candidate blocks.
std::string render_feature_line(const FeatureRecord& record,
                                std::size_t max_desc_chars);

// Resolves a raw name against candidates: exact match first, else a unique
// case-insensitive/trimmed match. Throws UnknownFeatureName / AmbiguousMatch.
std::string match_candidate(const std::string& raw_name,
                            const std::vector<std::string>& candidates);

// Scans for the last line of the form "Selected Feature: <name>, Reason:
// <text>" (markers case-insensitive; the reason may sit on the next line)
// and validates the name against candidates.
ParsedDecision parse_decision(const std::string& raw,
                              const std::vector<std::string>& candidates);

}  // namespace mofa
