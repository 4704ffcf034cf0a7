#include "mofa/baselines.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

void LassoConfig::validate() const {
  if (c <= 0.0) throw ConfigError("InvalidConfig", "lasso C must be > 0");
  if (tolerance <= 0.0)
    throw ConfigError("InvalidConfig", "tolerance must be > 0");
  if (max_iters <= 0)
    throw ConfigError("InvalidConfig", "max_iters must be > 0");
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

namespace {

// log(1 + exp(-m)) without overflow for large |m|.
double log1p_exp_neg(double m) {
  if (m < -35.0) return -m;
  return std::log1p(std::exp(-m));
}

void check_two_classes(const std::vector<int>& labels) {
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("SingleClassData",
                    "labels contain a single class; cannot fit");
}

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stdev;
};

Standardization standardize_columns(Dataset& data) {
  Standardization st;
  st.mean.assign(data.n_cols, 0.0);
  st.stdev.assign(data.n_cols, 1.0);
  for (std::size_t c = 0; c < data.n_cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < data.n_rows; ++r) sum += data.at(r, c);
    double mean = sum / static_cast<double>(data.n_rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < data.n_rows; ++r) {
      double d = data.at(r, c) - mean;
      ss += d * d;
    }
    double stdev = std::sqrt(ss / static_cast<double>(data.n_rows));
    if (stdev < 1e-12) stdev = 1.0;  // constant column; coefficient stays 0
    st.mean[c] = mean;
    st.stdev[c] = stdev;
    for (std::size_t r = 0; r < data.n_rows; ++r)
      data.at(r, c) = (data.at(r, c) - mean) / stdev;
  }
  return st;
}

}  // namespace

double logistic_loss_grad(const Dataset& data, const std::vector<double>& beta,
                          double intercept, std::vector<double>& grad_beta,
                          double& grad_intercept) {
  const std::size_t n = data.n_rows;
  const std::size_t d = data.n_cols;
  grad_beta.assign(d, 0.0);
  grad_intercept = 0.0;
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double z = intercept;
    for (std::size_t c = 0; c < d; ++c) z += data.at(r, c) * beta[c];
    double ysign = data.labels[r] ? 1.0 : -1.0;
    double m = ysign * z;
    loss += log1p_exp_neg(m);
    // d/dz log(1+exp(-yz)) = -y * sigma(-yz)
    double sig_neg = 1.0 / (1.0 + std::exp(m));
    double gz = -ysign * sig_neg;
    for (std::size_t c = 0; c < d; ++c) grad_beta[c] += gz * data.at(r, c);
    grad_intercept += gz;
  }
  double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  for (double& g : grad_beta) g *= inv_n;
  grad_intercept *= inv_n;
  return loss;
}

FittedLinearModel fit_l1_logistic(const Dataset& data, const LassoConfig& cfg) {
  cfg.validate();
  if (data.n_rows < 2)
    throw DataError("SingleClassData", "need at least 2 rows to fit");
  check_two_classes(data.labels);

  Dataset work = data;
  if (cfg.standardize) standardize_columns(work);

  const std::size_t n = work.n_rows;
  const std::size_t d = work.n_cols;
  const double lambda = 1.0 / (cfg.c * static_cast<double>(n));

  std::vector<double> beta(d, 0.0);
  double intercept = 0.0;
  std::vector<double> grad(d, 0.0);
  double grad_b = 0.0;
  double loss = logistic_loss_grad(work, beta, intercept, grad, grad_b);

  auto l1_norm = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  };
  auto kkt_residual = [&]() {
    double worst = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double viol = beta[c] != 0.0
                        ? std::abs(grad[c] + lambda * (beta[c] > 0 ? 1 : -1))
                        : std::max(0.0, std::abs(grad[c]) - lambda);
      worst = std::max(worst, viol);
    }
    return std::max(worst, std::abs(grad_b));
  };

  double objective = loss + lambda * l1_norm(beta);
  double step = 1.0;
  bool converged = false;
  int iter = 0;

  std::vector<double> beta_next(d);
  std::vector<double> grad_next(d);
  for (; iter < cfg.max_iters; ++iter) {
    double intercept_next = 0.0;
    double loss_next = 0.0;
    // Backtrack until the quadratic upper bound holds.
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t c = 0; c < d; ++c)
        beta_next[c] = soft_threshold(beta[c] - step * grad[c], step * lambda);
      intercept_next = intercept - step * grad_b;

      double gdot = 0.0, sqnorm = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        double delta = beta_next[c] - beta[c];
        gdot += grad[c] * delta;
        sqnorm += delta * delta;
      }
      double db = intercept_next - intercept;
      gdot += grad_b * db;
      sqnorm += db * db;

      double grad_b_next = 0.0;
      loss_next =
          logistic_loss_grad(work, beta_next, intercept_next, grad_next,
                             grad_b_next);
      if (loss_next <= loss + gdot + sqnorm / (2.0 * step) + 1e-15) {
        grad_b = grad_b_next;
        break;
      }
      step *= 0.5;
    }

    double max_change = std::abs(intercept_next - intercept);
    for (std::size_t c = 0; c < d; ++c)
      max_change = std::max(max_change, std::abs(beta_next[c] - beta[c]));

    beta.swap(beta_next);
    grad.swap(grad_next);
    intercept = intercept_next;
    loss = loss_next;

    double objective_next = loss + lambda * l1_norm(beta);
    // Proximal steps under a valid majorizer never increase the objective.
    assert(objective_next <= objective + 1e-10 * (1.0 + std::abs(objective)));
    objective = objective_next;
    step *= 1.25;  // cautiously re-grow after backtracking

    if (max_change < cfg.tolerance) {
      converged = true;
      // Polish until the optimality conditions are comfortably met; the
      // stopping rule above only bounds the last step's movement.
      if (kkt_residual() <= 0.5 * cfg.tolerance) {
        ++iter;
        break;
      }
    }
  }

  if (!converged && cfg.fail_on_no_convergence)
    throw DataError("DidNotConverge",
                    "no convergence in " + std::to_string(cfg.max_iters) +
                        " iterations");

  FittedLinearModel model;
  model.intercept = intercept;
  model.converged = converged;
  model.iterations_used = iter;
  for (std::size_t c = 0; c < d; ++c)
    model.coefficients[work.feature_names[c]] = beta[c];
  return model;
}

double l1_logistic_kkt_residual(const Dataset& data, const LassoConfig& cfg,
                                const FittedLinearModel& model) {
  Dataset work = data;
  if (cfg.standardize) standardize_columns(work);
  const double lambda = 1.0 / (cfg.c * static_cast<double>(work.n_rows));

  std::vector<double> beta(work.n_cols);
  for (std::size_t c = 0; c < work.n_cols; ++c)
    beta[c] = model.coefficients.at(work.feature_names[c]);

  std::vector<double> grad;
  double grad_b = 0.0;
  logistic_loss_grad(work, beta, model.intercept, grad, grad_b);

  double worst = std::abs(grad_b);
  for (std::size_t c = 0; c < work.n_cols; ++c) {
    double viol = beta[c] != 0.0
                      ? std::abs(grad[c] + lambda * (beta[c] > 0 ? 1 : -1))
                      : std::max(0.0, std::abs(grad[c]) - lambda);
    worst = std::max(worst, viol);
  }
  return worst;
}

std::vector<std::string> lasso_top_k(const FittedLinearModel& model,
                                     std::size_t k, std::string* warning) {
  if (k > model.coefficients.size())
    throw ConfigError("KTooLarge",
                      "k=" + std::to_string(k) + " exceeds " +
                          std::to_string(model.coefficients.size()) +
                          " coefficients");
  std::vector<std::pair<std::string, double>> entries(
      model.coefficients.begin(), model.coefficients.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    double ma = std::abs(a.second), mb = std::abs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  std::size_t nonzero = 0;
  for (const auto& [name, coef] : entries)
    if (coef != 0.0) ++nonzero;
  if (nonzero < k && warning != nullptr)
    *warning = "only " + std::to_string(nonzero) +
               " nonzero coefficients; padding to k=" + std::to_string(k) +
               " with zero-coefficient features";
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(entries[i].first);
  return out;
}

std::vector<std::string> random_select(const std::vector<std::string>& names,
                                       std::size_t k, std::uint64_t seed) {
  if (k > names.size())
    throw ConfigError("KTooLarge", "k=" + std::to_string(k) + " exceeds " +
                                       std::to_string(names.size()) +
                                       " names");
  std::vector<std::string> shuffled = names;
  Rng rng(seed);
  rng.shuffle(shuffled);
  shuffled.resize(k);
  return shuffled;
}

}  // namespace mofa
