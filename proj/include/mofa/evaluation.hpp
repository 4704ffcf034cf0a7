#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mofa/baselines.hpp"
#include "mofa/catalog.hpp"

namespace mofa {

enum class MetricKind { auc, ne };

const char* metric_name(MetricKind m);
MetricKind metric_from_string(const std::string& s);

struct EvaluationReport {
  std::string task;
  std::size_t k = 0;
  std::string method;
  std::size_t group_count = 0;
  double train_metric = 0.0;
  double test_metric = 0.0;
  MetricKind metric = MetricKind::auc;
  std::vector<std::string> selected;  // not part of the tabular output
  std::string config_digest;

  bool same_row(const EvaluationReport& other) const;
};

// Rank-sum AUC with ties counted half: (concordant + 0.5*tied)/(P*N).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean log-loss divided by the log-loss of the constant base-rate predictor.
// Predictions are clamped to [1e-15, 1-1e-15] before the logs.
double normalized_entropy(const std::vector<double>& preds,
                          const std::vector<int>& labels);

// Distinct non-empty groups; each empty-group feature counts as its own
// singleton so coordination cost is never understated.
std::size_t group_count(const std::vector<std::string>& selected,
                        const FeatureCatalog& catalog);

// Unpenalized logistic regression (tiny ridge 1e-8 for conditioning on
// collinear selections), damped Newton. Returns per-row probabilities.
FittedLinearModel fit_ridge_logistic(const Dataset& data,
                                     double ridge = 1e-8);
std::vector<double> predict_probabilities(const FittedLinearModel& model,
                                          const Dataset& data);

// Ridge-logistic loss + gradient (for finite-difference checks).
double ridge_logistic_loss_grad(const Dataset& data,
                                const std::vector<double>& beta,
                                double intercept, double ridge,
                                std::vector<double>& grad_beta,
                                double& grad_intercept);

// Fit on train restricted to `selected`, score train and test, return AUCs.
std::pair<double, double> train_eval_logistic(
    const Dataset& train, const Dataset& test,
    const std::vector<std::string>& selected);

// Same fit, either metric.
std::pair<double, double> train_eval_metric(
    const Dataset& train, const Dataset& test,
    const std::vector<std::string>& selected, MetricKind metric);

struct SyntheticSpec {
  std::size_t n_features = 100;
  std::size_t n_informative = 10;
  std::size_t n_groups = 4;
  std::size_t n_rows_train = 1000;
  std::size_t n_rows_test = 500;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  FeatureCatalog catalog;
  std::vector<std::string> truth;  // informative feature names
};

// Features ~ N(0,1); label ~ Bernoulli(sigma(w.x_informative + eps)). The
// catalog carries importance = |w| + small noise and group ids with the
// informative features concentrated into the first two groups.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

enum class ReportFormat { markdown, csv };

// Rows sorted by (task, k, method); markdown bolds the best test metric per
// (task, K) block and, for NE, appends win lines in both absolute and
// relative terms.
std::string render_report(const std::vector<EvaluationReport>& reports,
                          ReportFormat format);

std::vector<EvaluationReport> parse_report_csv(const std::string& text);
std::vector<EvaluationReport> parse_report_markdown(const std::string& text);

}  // namespace mofa
