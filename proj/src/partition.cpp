#include "mofa/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

using ordered_json = nlohmann::ordered_json;

BucketPlan make_buckets(const std::vector<std::string>& names, std::size_t b,
                        std::uint64_t seed) {
  if (b == 0) throw ConfigError("InvalidBuckets", "bucket count must be >= 1");
  if (b > names.size())
    throw ConfigError("TooManyBuckets",
                      std::to_string(b) + " buckets for " +
                          std::to_string(names.size()) + " features");
  std::vector<std::string> shuffled = names;
  Rng rng(seed);
  rng.shuffle(shuffled);

  BucketPlan plan;
  plan.buckets.resize(b);
  for (std::size_t i = 0; i < shuffled.size(); ++i)
    plan.buckets[i % b].push_back(std::move(shuffled[i]));
  return plan;
}

std::size_t compute_phase1_target(std::size_t k, std::size_t b,
                                  double factor) {
  if (k == 0 || b == 0)
    throw ConfigError("InvalidTarget", "k and b must be positive");
  if (factor < 1.0)
    throw ConfigError("InvalidFactor",
                      "oversample factor must be >= 1, got " +
                          format_number(factor));
  double exact = factor * static_cast<double>(k) / static_cast<double>(b);
  // 1e-9 slack absorbs float noise on exact quotients like 1.125*4000/10.
  auto target = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::max<std::size_t>(target, 1);
}

namespace {

[[noreturn]] void rethrow_with_context(const Error& e,
                                       const std::string& prefix) {
  const std::string message = prefix + ": " + e.what();
  switch (e.error_class()) {
    case ErrorClass::config: throw ConfigError(e.code(), message);
    case ErrorClass::data: throw DataError(e.code(), message);
    case ErrorClass::backend: throw BackendError(e.code(), message);
    case ErrorClass::internal: throw InternalError(e.code(), message);
  }
  throw InternalError(e.code(), message);
}

ordered_json trace_to_json(const std::vector<StepRecord>& trace,
                           bool verbose) {
  ordered_json arr = ordered_json::array();
  for (const auto& rec : trace) {
    ordered_json j;
    j["step"] = rec.step;
    j["chosen"] = rec.chosen;
    j["reason"] = rec.reason;
    j["retries"] = rec.retries;
    if (verbose) j["raw_response"] = rec.raw_response;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

PipelineResult run_pipeline(const FeatureCatalog& catalog,
                            const SelectionConfig& config,
                            SelectorBackend& backend) {
  config.validate();
  const std::size_t n = catalog.size();
  if (config.target_k > n)
    throw ConfigError("TargetExceedsPool",
                      "target k=" + std::to_string(config.target_k) +
                          " exceeds catalog size " + std::to_string(n));
  if (config.buckets > n)
    throw ConfigError("TooManyBuckets",
                      std::to_string(config.buckets) + " buckets for " +
                          std::to_string(n) + " features");

  PipelineResult result;
  result.plan = make_buckets(catalog.names(), config.buckets,
                             derive_seed(config.seed, "buckets"));

  std::size_t min_bucket = result.plan.buckets.back().size();
  std::size_t kprime = compute_phase1_target(config.target_k, config.buckets,
                                             config.oversample_factor);
  kprime = std::min(kprime, min_bucket);  // clamp; full buckets pass through
  result.plan.per_bucket_target = kprime;

  if (config.buckets * kprime < config.target_k)
    throw ConfigError("InsufficientQuota",
                      "B x K' = " + std::to_string(config.buckets * kprime) +
                          " < K = " + std::to_string(config.target_k) +
                          "; raise --oversample-factor or --buckets");

  const std::size_t b = config.buckets;
  result.phase1_states.resize(b);
  std::vector<std::exception_ptr> failures(b);
  std::atomic<std::size_t> next_bucket{0};
  std::atomic<bool> abort{false};

  std::size_t hw = std::max<unsigned>(std::thread::hardware_concurrency(), 1);
  std::size_t worker_count =
      config.workers == 0 ? std::min(b, hw) : std::min(config.workers, b);

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next_bucket.fetch_add(1);
      if (i >= b || abort.load()) return;
      try {
        result.phase1_states[i] =
            run_phase(result.plan.buckets[i], kprime, catalog, config,
                      backend);
      } catch (...) {
        failures[i] = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (std::size_t t = 0; t < worker_count; ++t)
      threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (std::size_t i = 0; i < b; ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      rethrow_with_context(e, "phase 1 bucket " + std::to_string(i));
    } catch (const std::exception& e) {
      throw InternalError("BucketFailure", "phase 1 bucket " +
                                               std::to_string(i) + ": " +
                                               e.what());
    }
  }

  for (const auto& state : result.phase1_states)
    result.refined_pool.insert(result.refined_pool.end(),
                               state.selected.begin(), state.selected.end());

  try {
    result.final_state = run_phase(result.refined_pool, config.target_k,
                                   catalog, config, backend);
  } catch (const Error& e) {
    rethrow_with_context(e, "phase 2");
  }
  result.final_selected = result.final_state.selected;
  return result;
}

std::string pipeline_to_json(const PipelineResult& result,
                             const SelectionConfig& config) {
  ordered_json doc;
  ordered_json cfg;
  cfg["k"] = config.target_k;
  cfg["buckets"] = config.buckets;
  cfg["oversample_factor"] = config.oversample_factor;
  cfg["per_bucket_target"] = result.plan.per_bucket_target;
  cfg["seed"] = config.seed;
  cfg["backend"] = backend_kind_name(config.backend.kind);
  cfg["objective"] = config.objective;
  ordered_json reqs = ordered_json::array();
  for (const auto& r : config.requirements) reqs.push_back(r.text);
  cfg["requirements"] = reqs;
  doc["config"] = cfg;

  doc["buckets"] = result.plan.buckets;

  ordered_json phase1 = ordered_json::array();
  for (std::size_t i = 0; i < result.phase1_states.size(); ++i) {
    ordered_json entry;
    entry["bucket"] = i;
    entry["selected"] = result.phase1_states[i].selected;
    entry["trace"] =
        trace_to_json(result.phase1_states[i].trace, config.verbose_trace);
    phase1.push_back(std::move(entry));
  }
  doc["phase1"] = phase1;

  doc["refined_pool"] = result.refined_pool;
  ordered_json final_entry;
  final_entry["selected"] = result.final_state.selected;
  final_entry["trace"] =
      trace_to_json(result.final_state.trace, config.verbose_trace);
  doc["final"] = final_entry;
  return doc.dump(2) + "\n";
}

}  // namespace mofa
