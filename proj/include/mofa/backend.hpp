#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mofa {

class FeatureCatalog;
struct PromptContext;
struct SelectionConfig;

enum class BackendKind { remote, mock_importance, mock_scripted };

const char* backend_kind_name(BackendKind k);
// Accepts both underscore and hyphen spellings ("mock-importance").
BackendKind backend_kind_from_string(const std::string& s);

struct BackendConfig {
  BackendKind kind = BackendKind::mock_importance;
  std::string endpoint_url;             // remote
  std::string model_name;               // remote
  double temperature = 0.0;
  int max_retries = 3;                  // transport retries (429/5xx/timeout)
  double timeout_s = 60.0;
  std::string importance_key = "importance";  // mock_importance
  std::string script_path;              // mock_scripted
  std::string api_key_env = "MOFA_API_KEY";
  // Declared defaults, not paper facts: backoff base 1s, x2, with jitter.
  int backoff_base_ms = 1000;
  int max_in_flight = 4;
  // 0 = unlimited. Counts remote POSTs across the whole run.
  std::uint64_t request_budget = 0;
};

// Everything a deterministic mock needs beyond the rendered prompt. The
// remote backend only reads `prompt`; mocks only read `view`.
struct SelectionView {
  const FeatureCatalog& catalog;
  const SelectionConfig& config;
  const std::vector<std::string>& selected;
  const std::vector<std::string>& candidates;
};

// The decision function: one prompt in, one raw textual decision out.
// Implementations must be safe to call from concurrent bucket workers.
class SelectorBackend {
 public:
  virtual ~SelectorBackend() = default;
  virtual std::string complete(const PromptContext& prompt,
                               const SelectionView& view) = 0;
  // True when repeated calls with identical inputs yield identical output.
  virtual bool is_deterministic() const = 0;
};

}  // namespace mofa
