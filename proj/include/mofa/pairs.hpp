#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mofa/catalog.hpp"

namespace mofa {

struct SignalTable {
  std::vector<std::string> signal_names;
  std::vector<double> values;  // row-major, n_rows x n_signals, each in [0,1]
  std::map<std::string, std::vector<double>> outcomes;
  std::size_t n_rows = 0;

  double at(std::size_t row, std::size_t signal) const {
    return values[row * signal_names.size() + signal];
  }
  std::size_t signal_index(const std::string& name) const;
  std::vector<double> signal_column(const std::string& name) const;
};

// CSV with signal columns plus outcome columns prefixed "outcome_".
SignalTable load_signal_table(const std::string& path);

struct PairCandidate {
  std::string left;   // left < right lexicographically
  std::string right;
  Metadata metadata;  // corr_<signal>_<outcome>, corr_product_<outcome>,
                      // coverage, optional degenerate marker

  std::string name() const { return left + "\xc3\x97" + right; }  // "a×b"
};

// Sample Pearson correlation; throws ZeroVariance on a constant series.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// All C(n,2) unordered pairs with per-outcome correlation metadata, plus a
// catalog whose records are the pairs so the selection pipeline consumes
// them exactly like features. Zero-variance series yield correlation 0.0
// and a "degenerate" metadata marker instead of an error.
std::pair<std::vector<PairCandidate>, FeatureCatalog> build_pair_pool(
    const SignalTable& table);

struct ValueModelSpec {
  std::map<std::string, double> linear_weights;
  std::map<std::pair<std::string, std::string>, double> pair_weights;
};

// Per-row score: sum w_s * s + sum w_(a,b) * (a*b).
std::vector<double> eval_value_model(const ValueModelSpec& spec,
                                     const SignalTable& table);

}  // namespace mofa
