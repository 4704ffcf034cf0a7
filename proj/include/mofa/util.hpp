#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mofa {

// Deterministic RNG used everywhere randomness is needed. All draws go
// through explicit algorithms (no std::*_distribution, whose output is
// implementation-defined) so the same seed yields the same stream on any
// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), n > 0. Rejection-sampled, unbiased.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (one spare cached).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    // Fisher-Yates, descending.
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable seed derivation: one top-level --seed, per-module streams keyed by
// label so adding a consumer never perturbs the others.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// FNV-1a over bytes; used for content digests in manifests and reports.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);
std::string file_digest(const std::string& path);

// Shortest round-trip decimal form of a double ("0.9", not "0.900000").
std::string format_number(double value);
// Strict double parse; returns false on trailing junk, NaN and infinities
// are accepted here and rejected by callers that need finite values.
bool parse_number(std::string_view text, double& out);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// One RFC-4180 record (handles quoted fields, "" escapes). `line` must not
// contain an unterminated quote; multi-line quoted fields are joined by the
// readers before calling this.
std::vector<std::string> split_csv_record(std::string_view line);
std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string iso8601_utc_now();

}  // namespace mofa
