#include "mofa/prompting.hpp"

#include <algorithm>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

namespace {

constexpr const char* kOutputLine =
    "Selected Feature: <name>, Reason: <one-line justification>";

std::string collapse_blank_runs(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  int newlines = 0;
  for (char c : text) {
    if (c == '\n') {
      ++newlines;
      if (newlines <= 2) out.push_back(c);
    } else {
      newlines = 0;
      out.push_back(c);
    }
  }
  // Trim leading blank lines and trailing whitespace, end with one newline.
  std::size_t start = 0;
  while (start < out.size() && out[start] == '\n') ++start;
  out.erase(0, start);
  while (!out.empty() && (out.back() == '\n' || out.back() == ' '))
    out.pop_back();
  out.push_back('\n');
  return out;
}

std::string truncate_description(const std::string& desc,
                                 std::size_t max_chars) {
  if (desc.size() <= max_chars) return desc;
  return desc.substr(0, max_chars) + "...";
}

// Case-insensitive search, returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from = 0) {
  if (needle.empty() || haystack.size() < needle.size()) return haystack.npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    if (iequals(haystack.substr(i, needle.size()), needle)) return i;
  }
  return haystack.npos;
}

// Strips wrapping quotes/backticks/asterisks and trailing punctuation that
// models commonly add around a bare feature name.
std::string strip_decorations(std::string_view raw) {
  std::string_view s = trim(raw);
  auto is_decor = [](char c) {
    return c == '"' || c == '\'' || c == '`' || c == '*';
  };
  while (!s.empty() && is_decor(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_decor(s.back())) s.remove_suffix(1);
  s = trim(s);
  while (!s.empty() &&
         (s.back() == ',' || s.back() == ';' || s.back() == '.'))
    s.remove_suffix(1);
  return std::string(trim(s));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == text.npos) {
      lines.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string default_prompt_template() {
  return "{objective}\n\n{requirements}\n\n{selected}\n\n{candidates}\n\n"
         "{format_instruction}\n";
}

std::string format_instruction() {
  std::string out = "## Output format\n";
  out +=
      "Reason briefly if needed, then end your reply with exactly one line "
      "in the form:\n";
  out += kOutputLine;
  out +=
      "\nThe feature name must exactly match one of the candidate features "
      "listed above.";
  return out;
}

std::string corrective_instruction() {
  std::string out =
      "Your previous reply could not be parsed. Reply again, ending with "
      "exactly one line in the form:\n";
  out += kOutputLine;
  out +=
      "\nThe feature name must exactly match one of the candidate features "
      "listed above.";
  return out;
}

std::string render_feature_line(const FeatureRecord& record,
                                std::size_t max_desc_chars) {
  std::string line = "- " + record.name + ": " +
                     truncate_description(record.description, max_desc_chars);
  std::vector<std::string> annotations;
  if (!record.group.empty()) annotations.push_back("group=" + record.group);
  if (record.category)
    annotations.push_back(std::string("category=") +
                          category_name(*record.category));
  for (const auto& [key, value] : record.metadata) {
    if (const double* d = std::get_if<double>(&value)) {
      annotations.push_back(key + "=" + format_number(*d));
    } else {
      annotations.push_back(key + "=" + std::get<std::string>(value));
    }
  }
  if (!annotations.empty()) {
    line += " [";
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      if (i) line += "; ";
      line += annotations[i];
    }
    line += "]";
  }
  return line;
}

std::string render_template(const std::string& tmpl,
                            const PromptContext& context) {
  const std::pair<std::string, const std::string*> slots[] = {
      {"{objective}", &context.objective_text},
      {"{requirements}", &context.requirements_block},
      {"{selected}", &context.selected_block},
      {"{candidates}", &context.candidate_block},
  };
  std::string out = tmpl;
  for (const auto& [placeholder, value] : slots) {
    std::size_t pos;
    while ((pos = out.find(placeholder)) != std::string::npos)
      out.replace(pos, placeholder.size(), *value);
  }
  std::string fi = format_instruction();
  std::size_t pos;
  while ((pos = out.find("{format_instruction}")) != std::string::npos)
    out.replace(pos, 20, fi);
  return collapse_blank_runs(out);
}

PromptContext build_prompt(const SelectionState& state,
                           const FeatureCatalog& catalog,
                           const SelectionConfig& config,
                           const PromptOptions& options) {
  PromptContext ctx;
  ctx.objective_text = "## Task\n" + config.objective;

  if (!config.requirements.empty()) {
    ctx.requirements_block = "## Auxiliary requirements\n";
    for (std::size_t i = 0; i < config.requirements.size(); ++i) {
      if (i) ctx.requirements_block += '\n';
      ctx.requirements_block += "- " + config.requirements[i].text;
    }
  }

  ctx.selected_block = "## Currently selected features (" +
                       std::to_string(state.selected.size()) + ")\n";
  if (state.selected.empty()) {
    ctx.selected_block += "(none selected yet)";
  } else {
    for (std::size_t i = 0; i < state.selected.size(); ++i) {
      if (i) ctx.selected_block += '\n';
      ctx.selected_block +=
          render_feature_line(catalog.at(state.selected[i]),
                              config.max_desc_chars);
    }
  }

  ctx.candidate_block = "## Candidate features (" +
                        std::to_string(state.available.size()) + ")\n";
  for (std::size_t i = 0; i < state.available.size(); ++i) {
    if (i) ctx.candidate_block += '\n';
    ctx.candidate_block += render_feature_line(catalog.at(state.available[i]),
                                               config.max_desc_chars);
  }

  std::string tmpl = options.template_text;
  if (tmpl.empty()) tmpl = config.prompt_template;
  if (tmpl.empty()) tmpl = default_prompt_template();
  ctx.rendered = render_template(tmpl, ctx);
  ctx.token_estimate = ctx.rendered.size() / 4;
  return ctx;
}

std::string match_candidate(const std::string& raw_name,
                            const std::vector<std::string>& candidates) {
  std::string name(trim(raw_name));
  // Exact match wins outright.
  for (const auto& c : candidates) {
    if (c == name) return c;
  }
  std::string normalized = to_lower(strip_decorations(name));
  if (normalized.empty())
    throw BackendError("UnknownFeatureName", "empty feature name");
  std::vector<std::string> hits;
  for (const auto& c : candidates) {
    if (to_lower(c) == normalized) hits.push_back(c);
  }
  if (hits.empty())
    throw BackendError("UnknownFeatureName",
                       "'" + name + "' is not a candidate feature");
  if (hits.size() > 1)
    throw BackendError("AmbiguousMatch",
                       "'" + name + "' matches multiple candidates");
  return hits[0];
}

ParsedDecision parse_decision(const std::string& raw,
                              const std::vector<std::string>& candidates) {
  constexpr std::string_view kSelectMarker = "selected feature:";
  constexpr std::string_view kReasonMarker = "reason:";

  auto lines = split_lines(raw);
  for (std::size_t li = lines.size(); li-- > 0;) {
    std::string_view line = lines[li];
    std::size_t mpos = ifind(line, kSelectMarker);
    if (mpos == line.npos) continue;

    std::string_view rest = line.substr(mpos + kSelectMarker.size());
    std::string name_part;
    std::string reason;
    std::size_t rpos = ifind(rest, kReasonMarker);
    if (rpos != rest.npos) {
      name_part = std::string(trim(rest.substr(0, rpos)));
      reason = std::string(trim(rest.substr(rpos + kReasonMarker.size())));
    } else if (li + 1 < lines.size()) {
      std::size_t next_rpos = ifind(lines[li + 1], kReasonMarker);
      if (next_rpos == lines[li + 1].npos) continue;  // no accompanying reason
      name_part = std::string(trim(rest));
      reason = std::string(
          trim(lines[li + 1].substr(next_rpos + kReasonMarker.size())));
    } else {
      continue;  // decision line without a reason anywhere
    }
    // Drop the separating comma left at the end of the name part.
    while (!name_part.empty() &&
           (name_part.back() == ',' || name_part.back() == ';'))
      name_part.pop_back();
    name_part = std::string(trim(name_part));
    if (name_part.empty()) continue;

    ParsedDecision decision;
    decision.feature_name = match_candidate(name_part, candidates);
    decision.reason = reason;
    return decision;
  }
  throw BackendError("NoDecisionFound",
                     "no 'Selected Feature: ..., Reason: ...' line found");
}

}  // namespace mofa
