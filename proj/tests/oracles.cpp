#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

double auc_bruteforce(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double concordant = 0.0, tied = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) tied += 1.0;
    }
  }
  if (pairs == 0) throw std::runtime_error("need both classes");
  return (concordant + 0.5 * tied) / static_cast<double>(pairs);
}

double ne_formula(const std::vector<double>& preds,
                  const std::vector<int>& labels) {
  const double lo = 1e-15, hi = 1.0 - 1e-15;
  double ll = 0.0, pbar = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double p = std::min(std::max(preds[i], lo), hi);
    ll += labels[i] * std::log(p) + (1 - labels[i]) * std::log(1.0 - p);
    pbar += labels[i];
  }
  double n = static_cast<double>(preds.size());
  pbar /= n;
  double base = pbar * std::log(pbar) + (1.0 - pbar) * std::log(1.0 - pbar);
  return (ll / n) / base;
}

double pearson_direct(const std::vector<double>& x,
                      const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) /
         std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

LassoFit lasso_coordinate_descent(const mofa::Dataset& data, double c,
                                  int max_sweeps, double tol) {
  const std::size_t n = data.n_rows;
  const std::size_t d = data.n_cols;
  const double lambda = 1.0 / (c * static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);

  LassoFit fit;
  fit.beta.assign(d, 0.0);
  std::vector<double> z(n, 0.0);  // running linear predictor

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;

    for (std::size_t j = 0; j <= d; ++j) {
      double g = 0.0, h = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double p = 1.0 / (1.0 + std::exp(-z[r]));
        double resid = p - data.labels[r];
        double w = p * (1.0 - p);
        double xj = j < d ? data.at(r, j) : 1.0;
        g += resid * xj;
        h += w * xj * xj;
      }
      g *= inv_n;
      h = h * inv_n + 1e-12;

      double delta;
      if (j < d) {
        double target = fit.beta[j] - g / h;
        double updated = 0.0;
        double thresh = lambda / h;
        if (target > thresh) updated = target - thresh;
        else if (target < -thresh) updated = target + thresh;
        delta = updated - fit.beta[j];
      } else {
        delta = -g / h;
      }
      delta = std::min(std::max(delta, -10.0), 10.0);
      if (delta == 0.0) continue;
      if (j < d) {
        fit.beta[j] += delta;
        for (std::size_t r = 0; r < n; ++r) z[r] += delta * data.at(r, j);
      } else {
        fit.intercept += delta;
        for (std::size_t r = 0; r < n; ++r) z[r] += delta;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }

    if (max_delta < tol) break;
  }
  return fit;
}

std::vector<std::string> top_k_by_importance(
    const mofa::FeatureCatalog& catalog,
    const std::vector<std::string>& candidates, std::size_t k,
    const std::string& key) {
  std::vector<std::string> sorted = candidates;
  std::sort(sorted.begin(), sorted.end(),
            [&](const std::string& a, const std::string& b) {
              double ia = catalog.at(a).numeric_meta(key).value_or(
                  -std::numeric_limits<double>::infinity());
              double ib = catalog.at(b).numeric_meta(key).value_or(
                  -std::numeric_limits<double>::infinity());
              if (ia != ib) return ia > ib;
              return a < b;
            });
  sorted.resize(k);
  return sorted;
}

}  // namespace oracle
