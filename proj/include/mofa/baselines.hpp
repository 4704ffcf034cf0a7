#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mofa/catalog.hpp"

namespace mofa {

struct LassoConfig {
  double c = 0.1;          // inverse regularization strength
  int max_iters = 10000;
  double tolerance = 1e-6;
  bool standardize = true;
  bool fail_on_no_convergence = false;

  void validate() const;
};

struct FittedLinearModel {
  std::map<std::string, double> coefficients;  // standardized units when
                                               // cfg.standardize is on
  double intercept = 0.0;
  bool converged = false;
  int iterations_used = 0;
};

// Proximal operator of eta*|.|: S(3,1)=2, S(-3,1)=-2, S(0.5,1)=0.
double soft_threshold(double value, double threshold);

// Mean logistic loss (1/n) sum log(1+exp(-y~ * (x.beta + b))) with y~=2y-1,
// plus its gradient. Shared by the solver and the finite-difference checks.
double logistic_loss_grad(const Dataset& data, const std::vector<double>& beta,
                          double intercept, std::vector<double>& grad_beta,
                          double& grad_intercept);

// L1-penalized logistic regression solved by proximal gradient (ISTA with
// backtracking). Objective, in the standard C-parameterization scaled to a
// per-sample average:
//
//   F(beta, b) = (1/n) sum_i log(1 + exp(-y~_i (x_i . beta + b)))
//                + lambda * ||beta||_1,   lambda = 1 / (C * n)
//
// which is C * sum_i loss_i + ||beta||_1 divided by C*n. The intercept is
// unpenalized. With standardize on, columns are z-scored first and the
// returned coefficients are in standardized units.
FittedLinearModel fit_l1_logistic(const Dataset& data, const LassoConfig& cfg);

// Max KKT violation of `model` on `data` under `cfg`'s objective:
// |grad_j + lambda*sign(beta_j)| for nonzero beta_j, max(0, |grad_j| - lambda)
// for zero ones. A converged fit satisfies this within ~10x tolerance.
double l1_logistic_kkt_residual(const Dataset& data, const LassoConfig& cfg,
                                const FittedLinearModel& model);

// Top-k names by |coefficient|, ties broken lexicographically. When fewer
// than k coefficients are nonzero the tail is padded with zero-coefficient
// names and `warning` (if given) says so.
std::vector<std::string> lasso_top_k(const FittedLinearModel& model,
                                     std::size_t k,
                                     std::string* warning = nullptr);

// First k of a seeded uniform shuffle.
std::vector<std::string> random_select(const std::vector<std::string>& names,
                                       std::size_t k, std::uint64_t seed);

}  // namespace mofa
