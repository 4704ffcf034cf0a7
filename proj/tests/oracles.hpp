// Test-only reference implementations, written independently of the library
// code paths they check. Each uses a different algorithmic route than the
// implementation under test (pair counting vs rank-sum, coordinate descent
// vs proximal gradient, raw-moment Pearson vs centered sums).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mofa/catalog.hpp"

namespace oracle {

// Exhaustive O(n^2) pair count: (concordant + 0.5 * tied) / (P * N).
double auc_bruteforce(const std::vector<double>& scores,
                      const std::vector<int>& labels);

// Direct two-line transcription of the normalized-entropy formula.
double ne_formula(const std::vector<double>& preds,
                  const std::vector<int>& labels);

// Pearson r from raw moments:
// (n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2)(n*Syy - Sy^2)).
double pearson_direct(const std::vector<double>& x,
                      const std::vector<double>& y);

struct LassoFit {
  std::vector<double> beta;  // aligned with dataset column order
  double intercept = 0.0;
};

// L1 logistic regression by cyclic prox-Newton coordinate descent on the
// objective (1/n) sum log(1+exp(-y~ z)) + ||beta||_1 / (c n). Run to high
// precision; no standardization (callers pre-scale).
LassoFit lasso_coordinate_descent(const mofa::Dataset& data, double c,
                                  int max_sweeps = 2000, double tol = 1e-11);

// Names ranked by the catalog's numeric importance metadata, descending,
// lexicographic on ties; first k.
std::vector<std::string> top_k_by_importance(
    const mofa::FeatureCatalog& catalog,
    const std::vector<std::string>& candidates, std::size_t k,
    const std::string& key = "importance");

}  // namespace oracle
