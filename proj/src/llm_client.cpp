#include "mofa/llm_client.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mofa/errors.hpp"
#include "mofa/prompting.hpp"
#include "mofa/util.hpp"

namespace mofa {

using nlohmann::json;

const char* backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::remote: return "remote";
    case BackendKind::mock_importance: return "mock-importance";
    case BackendKind::mock_scripted: return "mock-scripted";
  }
  return "mock-importance";
}

BackendKind backend_kind_from_string(const std::string& s) {
  std::string norm = to_lower(s);
  std::replace(norm.begin(), norm.end(), '_', '-');
  if (norm == "remote") return BackendKind::remote;
  if (norm == "mock-importance") return BackendKind::mock_importance;
  if (norm == "mock-scripted") return BackendKind::mock_scripted;
  throw ConfigError("InvalidBackend", "unknown backend kind: " + s);
}

// ---------------------------------------------------------------------------
// mock_importance

ImportanceMockBackend::ImportanceMockBackend(BackendConfig config)
    : config_(std::move(config)) {}

std::string ImportanceMockBackend::complete(const PromptContext&,
                                            const SelectionView& view) {
  if (view.candidates.empty())
    throw InternalError("EmptyCandidates", "mock asked to pick from nothing");

  const bool consolidate = has_group_consolidation(view.config.requirements);
  std::unordered_set<std::string> selected_groups;
  if (consolidate) {
    for (const auto& name : view.selected) {
      const auto& group = view.catalog.at(name).group;
      if (!group.empty()) selected_groups.insert(group);
    }
  }

  const std::string& key = config_.importance_key;
  const std::string* best = nullptr;
  bool best_in_group = false;
  double best_importance = -std::numeric_limits<double>::infinity();
  for (const auto& name : view.candidates) {
    const FeatureRecord& rec = view.catalog.at(name);
    bool in_group = consolidate && !rec.group.empty() &&
                    selected_groups.count(rec.group) != 0;
    double importance = rec.numeric_meta(key).value_or(
        -std::numeric_limits<double>::infinity());
    bool better;
    if (best == nullptr) {
      better = true;
    } else if (in_group != best_in_group) {
      better = in_group;
    } else if (importance != best_importance) {
      better = importance > best_importance;
    } else {
      better = name < *best;
    }
    if (better) {
      best = &name;
      best_in_group = in_group;
      best_importance = importance;
    }
  }

  std::string reason;
  if (best_in_group) {
    reason = "highest importance among candidates in already-selected group " +
             view.catalog.at(*best).group;
  } else {
    reason = "highest importance among candidates";
  }
  return "Selected Feature: " + *best + ", Reason: " + reason;
}

// ---------------------------------------------------------------------------
// mock_scripted

namespace {

std::string unescape_newlines(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == 'n') {
      out.push_back('\n');
      ++i;
    } else {
      out.push_back(line[i]);
    }
  }
  return out;
}

}  // namespace

ScriptedBackend::ScriptedBackend(const BackendConfig& config) {
  if (config.script_path.empty())
    throw ConfigError("InvalidConfig", "mock-scripted requires script_path");
  std::istringstream in(read_file(config.script_path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines_.push_back(unescape_newlines(line));
  }
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> lines)
    : lines_(std::move(lines)) {}

std::string ScriptedBackend::complete(const PromptContext&,
                                      const SelectionView&) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (cursor_ >= lines_.size())
    throw BackendError("ScriptExhausted",
                       "script ran out after " + std::to_string(cursor_) +
                           " responses");
  return lines_[cursor_++];
}

// ---------------------------------------------------------------------------
// remote

namespace {

// Jitter source for backoff; remote runs are declared nondeterministic.
double jitter01() {
  thread_local Rng rng(static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count()));
  return rng.uniform01();
}

void split_url(const std::string& url, std::string& base, std::string& path) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("InvalidEndpoint", "endpoint_url must include scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base = url;
    path = "/";
  } else {
    base = url.substr(0, path_start);
    path = url.substr(path_start);
  }
}

}  // namespace

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty() || config_.model_name.empty())
    throw ConfigError("InvalidConfig",
                      "remote backend requires endpoint_url and model_name");
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw BackendError("AuthError", "environment variable " +
                                        config_.api_key_env +
                                        " is not set; no API credential");
  api_key_ = key;
  split_url(config_.endpoint_url, base_url_, path_);
}

void RemoteBackend::acquire_slot() {
  std::unique_lock<std::mutex> lock(mutex_);
  while (config_.max_in_flight > 0 && in_flight_ >= config_.max_in_flight) {
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    lock.lock();
  }
  ++in_flight_;
  if (config_.request_budget > 0 && requests_made_ >= config_.request_budget) {
    --in_flight_;
    throw BackendError("RequestBudgetExhausted",
                       "request budget of " +
                           std::to_string(config_.request_budget) +
                           " exhausted");
  }
  ++requests_made_;
}

void RemoteBackend::release_slot() {
  std::lock_guard<std::mutex> lock(mutex_);
  --in_flight_;
}

std::string RemoteBackend::complete(const PromptContext& prompt,
                                    const SelectionView&) {
  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array({
      {{"role", "user"}, {"content", prompt.rendered}},
  });
  body["temperature"] = config_.temperature;
  const std::string payload = body.dump();

  std::string last_error;
  bool rate_limited = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      double delay_ms = config_.backoff_base_ms *
                        std::pow(2.0, attempt - 1) * (1.0 + 0.25 * jitter01());
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(delay_ms)));
    }
    acquire_slot();
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long>(config_.timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long>(config_.timeout_s * 1000)));
    client.set_default_headers({{"Authorization", "Bearer " + api_key_}});
    auto res = client.Post(path_, payload, "application/json");
    release_slot();

    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      rate_limited = false;
      continue;  // timeouts and connection errors are retried
    }
    if (res->status == 401 || res->status == 403)
      throw BackendError("AuthError", "endpoint rejected credential (HTTP " +
                                          std::to_string(res->status) + ")");
    if (res->status == 429) {
      last_error = "HTTP 429";
      rate_limited = true;
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      rate_limited = false;
      continue;
    }
    if (res->status != 200)
      throw BackendError("TransportError",
                         "unexpected HTTP " + std::to_string(res->status));

    try {
      json parsed = json::parse(res->body);
      return parsed.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const std::exception& e) {
      throw BackendError("TransportError",
                         std::string("malformed completion response: ") +
                             e.what());
    }
  }
  if (rate_limited)
    throw BackendError("RateLimited",
                       "rate limited after " +
                           std::to_string(config_.max_retries) + " retries");
  throw BackendError("TransportError",
                     "request failed after " +
                         std::to_string(config_.max_retries) +
                         " retries: " + last_error);
}

std::unique_ptr<SelectorBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::remote:
      return std::make_unique<RemoteBackend>(config);
    case BackendKind::mock_importance:
      return std::make_unique<ImportanceMockBackend>(config);
    case BackendKind::mock_scripted:
      return std::make_unique<ScriptedBackend>(config);
  }
  throw InternalError("BadBackend", "unhandled backend kind");
}

}  // namespace mofa
