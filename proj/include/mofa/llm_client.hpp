#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mofa/backend.hpp"
#include "mofa/selection.hpp"

namespace mofa {

// Deterministic stand-in for the LLM: picks the candidate with the highest
// numeric `importance_key` metadata, lexicographically smallest name on ties.
// When a group_consolidation requirement is active, candidates whose group
// already appears in the selected set are preferred before importance is
// compared.
class ImportanceMockBackend : public SelectorBackend {
 public:
  explicit ImportanceMockBackend(BackendConfig config);

  std::string complete(const PromptContext& prompt,
                       const SelectionView& view) override;
  bool is_deterministic() const override { return true; }

 private:
  BackendConfig config_;
};

// Replays responses from a script file, one per call, for parser
// fault-injection tests. "\n" escapes in a script line become real newlines
// so fixtures can carry multi-line responses.
class ScriptedBackend : public SelectorBackend {
 public:
  explicit ScriptedBackend(const BackendConfig& config);
  explicit ScriptedBackend(std::vector<std::string> lines);

  std::string complete(const PromptContext& prompt,
                       const SelectionView& view) override;
  bool is_deterministic() const override { return true; }

 private:
  std::vector<std::string> lines_;
  std::size_t cursor_ = 0;
  std::mutex mutex_;
};

// Chat-completions HTTP client. POSTs {model, messages, temperature} to the
// configured endpoint with bearer auth from api_key_env and returns
// choices[0].message.content. 429/5xx/timeouts are retried with exponential
// backoff (base x2, jittered) up to max_retries; 401/403 are not retried.
class RemoteBackend : public SelectorBackend {
 public:
  // Fails fast with AuthError when the credential env var is missing.
  explicit RemoteBackend(BackendConfig config);

  std::string complete(const PromptContext& prompt,
                       const SelectionView& view) override;
  bool is_deterministic() const override { return false; }

 private:
  void acquire_slot();
  void release_slot();

  BackendConfig config_;
  std::string api_key_;
  std::string base_url_;
  std::string path_;
  std::uint64_t requests_made_ = 0;
  int in_flight_ = 0;
  std::mutex mutex_;
};

std::unique_ptr<SelectorBackend> make_backend(const BackendConfig& config);

}  // namespace mofa
