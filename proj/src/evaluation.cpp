#include "mofa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

const char* metric_name(MetricKind m) {
  return m == MetricKind::auc ? "auc" : "ne";
}

MetricKind metric_from_string(const std::string& s) {
  if (s == "auc") return MetricKind::auc;
  if (s == "ne") return MetricKind::ne;
  throw ConfigError("InvalidMetric", "metric must be auc or ne, got: " + s);
}

bool EvaluationReport::same_row(const EvaluationReport& other) const {
  return task == other.task && k == other.k && method == other.method &&
         group_count == other.group_count &&
         train_metric == other.train_metric &&
         test_metric == other.test_metric && metric == other.metric &&
         config_digest == other.config_digest;
}

namespace {

void check_two_classes(const std::vector<int>& labels) {
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("SingleClassData", "both classes required");
}

constexpr double kProbClamp = 1e-15;

double mean_log_loss(const std::vector<double>& preds,
                     const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double p = std::clamp(preds[i], kProbClamp, 1.0 - kProbClamp);
    total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(preds.size());
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("LengthMismatch", "scores and labels differ in length");
  if (scores.empty()) throw DataError("SingleClassData", "empty input");
  check_two_classes(labels);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j averaged across the tie group
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  std::size_t n_neg = scores.size() - n_pos;
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double normalized_entropy(const std::vector<double>& preds,
                          const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw DataError("LengthMismatch", "preds and labels differ in length");
  if (preds.empty()) throw DataError("SingleClassData", "empty input");
  check_two_classes(labels);

  double base_rate = 0.0;
  for (int y : labels) base_rate += y;
  base_rate /= static_cast<double>(labels.size());
  double base_loss =
      -(base_rate * std::log(base_rate) +
        (1.0 - base_rate) * std::log(1.0 - base_rate));
  return mean_log_loss(preds, labels) / base_loss;
}

std::size_t group_count(const std::vector<std::string>& selected,
                        const FeatureCatalog& catalog) {
  std::set<std::string> groups;
  std::size_t singletons = 0;
  for (const auto& name : selected) {
    const auto& group = catalog.at(name).group;
    if (group.empty()) ++singletons;
    else groups.insert(group);
  }
  return groups.size() + singletons;
}

double ridge_logistic_loss_grad(const Dataset& data,
                                const std::vector<double>& beta,
                                double intercept, double ridge,
                                std::vector<double>& grad_beta,
                                double& grad_intercept) {
  double loss =
      logistic_loss_grad(data, beta, intercept, grad_beta, grad_intercept);
  for (std::size_t c = 0; c < beta.size(); ++c) {
    loss += 0.5 * ridge * beta[c] * beta[c];
    grad_beta[c] += ridge * beta[c];
  }
  return loss;
}

namespace {

// Solves A x = rhs in place for SPD A (dimension d), plain Cholesky.
std::vector<double> cholesky_solve(std::vector<double> a, std::size_t d,
                                   std::vector<double> rhs) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (diag <= 0.0)
      throw InternalError("NotPositiveDefinite", "Cholesky failed");
    diag = std::sqrt(diag);
    a[j * d + j] = diag;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = v / diag;
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < d; ++i) {
    double v = rhs[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * d + k] * rhs[k];
    rhs[i] = v / a[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    double v = rhs[i];
    for (std::size_t k = i + 1; k < d; ++k) v -= a[k * d + i] * rhs[k];
    rhs[i] = v / a[i * d + i];
  }
  return rhs;
}

}  // namespace

FittedLinearModel fit_ridge_logistic(const Dataset& data, double ridge) {
  if (data.n_rows == 0) throw DataError("SingleClassData", "empty dataset");
  check_two_classes(data.labels);

  const std::size_t n = data.n_rows;
  const std::size_t d = data.n_cols;
  const std::size_t dim = d + 1;  // [beta; intercept]

  std::vector<double> beta(d, 0.0);
  double intercept = 0.0;
  std::vector<double> grad(d, 0.0);
  double grad_b = 0.0;
  double loss =
      ridge_logistic_loss_grad(data, beta, intercept, ridge, grad, grad_b);

  int iter = 0;
  for (; iter < 100; ++iter) {
    double gmax = std::abs(grad_b);
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < 1e-10) break;

    // Hessian of the averaged loss, with the intercept as the last column.
    std::vector<double> hess(dim * dim, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double z = intercept;
      for (std::size_t c = 0; c < d; ++c) z += data.at(r, c) * beta[c];
      double p = 1.0 / (1.0 + std::exp(-z));
      double w = std::max(p * (1.0 - p), 1e-12);
      for (std::size_t a = 0; a < dim; ++a) {
        double xa = a < d ? data.at(r, a) : 1.0;
        for (std::size_t bcol = a; bcol < dim; ++bcol) {
          double xb = bcol < d ? data.at(r, bcol) : 1.0;
          hess[a * dim + bcol] += w * xa * xb;
        }
      }
    }
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t bcol = a; bcol < dim; ++bcol) {
        double v = hess[a * dim + bcol] * inv_n;
        hess[a * dim + bcol] = v;
        hess[bcol * dim + a] = v;
      }
    for (std::size_t c = 0; c < d; ++c) hess[c * dim + c] += ridge;
    hess[d * dim + d] += 1e-12;  // keep the intercept block SPD too

    std::vector<double> rhs(dim);
    for (std::size_t c = 0; c < d; ++c) rhs[c] = -grad[c];
    rhs[d] = -grad_b;
    std::vector<double> delta = cholesky_solve(std::move(hess), dim, rhs);

    // Damped step: halve until the loss does not increase.
    double scale = 1.0;
    std::vector<double> beta_try(d);
    std::vector<double> grad_try(d);
    for (int half = 0; half < 40; ++half) {
      for (std::size_t c = 0; c < d; ++c)
        beta_try[c] = beta[c] + scale * delta[c];
      double intercept_try = intercept + scale * delta[d];
      double grad_b_try = 0.0;
      double loss_try = ridge_logistic_loss_grad(data, beta_try, intercept_try,
                                                 ridge, grad_try, grad_b_try);
      if (loss_try <= loss + 1e-15) {
        beta.swap(beta_try);
        intercept = intercept_try;
        grad.swap(grad_try);
        grad_b = grad_b_try;
        loss = loss_try;
        break;
      }
      scale *= 0.5;
    }
  }

  FittedLinearModel model;
  model.intercept = intercept;
  model.converged = true;
  model.iterations_used = iter;
  for (std::size_t c = 0; c < d; ++c)
    model.coefficients[data.feature_names[c]] = beta[c];
  return model;
}

std::vector<double> predict_probabilities(const FittedLinearModel& model,
                                          const Dataset& data) {
  std::vector<double> beta(data.n_cols);
  for (std::size_t c = 0; c < data.n_cols; ++c)
    beta[c] = model.coefficients.at(data.feature_names[c]);
  std::vector<double> out(data.n_rows);
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    double z = model.intercept;
    for (std::size_t c = 0; c < data.n_cols; ++c)
      z += data.at(r, c) * beta[c];
    out[r] = 1.0 / (1.0 + std::exp(-z));
  }
  return out;
}

std::pair<double, double> train_eval_logistic(
    const Dataset& train, const Dataset& test,
    const std::vector<std::string>& selected) {
  return train_eval_metric(train, test, selected, MetricKind::auc);
}

std::pair<double, double> train_eval_metric(
    const Dataset& train, const Dataset& test,
    const std::vector<std::string>& selected, MetricKind metric) {
  if (selected.empty())
    throw DataError("EmptySelection", "no features selected for evaluation");
  Dataset tr = project(train, selected);
  Dataset te = project(test, selected);
  FittedLinearModel model = fit_ridge_logistic(tr);
  std::vector<double> train_preds = predict_probabilities(model, tr);
  std::vector<double> test_preds = predict_probabilities(model, te);
  if (metric == MetricKind::auc)
    return {auc(train_preds, tr.labels), auc(test_preds, te.labels)};
  return {normalized_entropy(train_preds, tr.labels),
          normalized_entropy(test_preds, te.labels)};
}

void SyntheticSpec::validate() const {
  if (n_features == 0)
    throw ConfigError("InvalidConfig", "n_features must be positive");
  if (n_informative > n_features)
    throw ConfigError("InvalidConfig",
                      "n_informative cannot exceed n_features");
  if (n_groups == 0)
    throw ConfigError("InvalidConfig", "n_groups must be >= 1");
  if (noise_sigma < 0.0)
    throw ConfigError("InvalidConfig", "noise_sigma must be >= 0");
}

namespace {

std::string padded_index(std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  while (digits.size() < width) digits.insert(digits.begin(), '0');
  return digits;
}

Dataset draw_rows(const std::vector<std::string>& names,
                  const std::vector<double>& weights, double noise_sigma,
                  std::size_t n_rows, Rng& rng) {
  Dataset ds;
  ds.feature_names = names;
  ds.n_cols = names.size();
  ds.n_rows = n_rows;
  ds.values.resize(n_rows * names.size());
  ds.labels.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
      double x = rng.normal();
      ds.at(r, c) = x;
      z += weights[c] * x;
    }
    z += noise_sigma * rng.normal();
    double p = 1.0 / (1.0 + std::exp(-z));
    ds.labels[r] = rng.uniform01() < p ? 1 : 0;
  }
  return ds;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_features;

  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i)
    names[i] = "feat_" + padded_index(i, 4);

  Rng structure_rng(derive_seed(spec.seed, "synth.structure"));
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  structure_rng.shuffle(indices);
  std::vector<bool> informative(n, false);
  for (std::size_t i = 0; i < spec.n_informative; ++i)
    informative[indices[i]] = true;

  std::vector<double> weights(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!informative[i]) continue;
    double magnitude = structure_rng.uniform(1.0, 3.0);
    weights[i] = structure_rng.uniform01() < 0.5 ? -magnitude : magnitude;
  }

  // Informative features go to the first one or two groups; the rest cycle
  // through all groups. That gives group-consolidation runs real signal.
  std::size_t informative_groups = std::min<std::size_t>(2, spec.n_groups);
  SyntheticData out;
  std::size_t informative_seen = 0;
  static const char* kCategories[] = {"sparse", "dense", "float"};
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRecord rec;
    rec.name = names[i];
    rec.description =
        "synthetic standard-normal signal column " + std::to_string(i) +
        " of the planted binary classification corpus";
    std::size_t group_idx;
    if (informative[i]) {
      group_idx = informative_seen++ % informative_groups;
    } else {
      group_idx = i % spec.n_groups;
    }
    rec.group = "g" + padded_index(group_idx, 2);
    rec.category = *category_from_string(kCategories[i % 3]);
    rec.metadata["importance"] =
        std::abs(weights[i]) + structure_rng.uniform(0.0, 0.05);
    out.catalog.add(std::move(rec));
    if (informative[i]) out.truth.push_back(names[i]);
  }

  Rng train_rng(derive_seed(spec.seed, "synth.train"));
  Rng test_rng(derive_seed(spec.seed, "synth.test"));
  out.train =
      draw_rows(names, weights, spec.noise_sigma, spec.n_rows_train, train_rng);
  out.test =
      draw_rows(names, weights, spec.noise_sigma, spec.n_rows_test, test_rng);
  return out;
}

namespace {

std::string format_metric_cell(double value) { return format_number(value); }

struct RowKey {
  std::string task;
  std::size_t k;
};

}  // namespace

std::string render_report(const std::vector<EvaluationReport>& reports,
                          ReportFormat format) {
  std::vector<EvaluationReport> rows = reports;
  std::sort(rows.begin(), rows.end(),
            [](const EvaluationReport& a, const EvaluationReport& b) {
              if (a.task != b.task) return a.task < b.task;
              if (a.k != b.k) return a.k < b.k;
              return a.method < b.method;
            });

  if (format == ReportFormat::csv) {
    std::string out = "task,k,method,metric,groups,train,test,config_digest\n";
    for (const auto& r : rows) {
      out += csv_escape(r.task) + ',' + std::to_string(r.k) + ',' +
             csv_escape(r.method) + ',' + metric_name(r.metric) + ',' +
             std::to_string(r.group_count) + ',' +
             format_metric_cell(r.train_metric) + ',' +
             format_metric_cell(r.test_metric) + ',' +
             csv_escape(r.config_digest) + '\n';
    }
    return out;
  }

  // Best test metric per (task, K): max for AUC, min for NE.
  auto is_best = [&](const EvaluationReport& r) {
    for (const auto& other : rows) {
      if (other.task != r.task || other.k != r.k) continue;
      if (r.metric == MetricKind::auc && other.test_metric > r.test_metric)
        return false;
      if (r.metric == MetricKind::ne && other.test_metric < r.test_metric)
        return false;
    }
    return true;
  };

  std::string out = "# Evaluation report\n";
  std::string current_task;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.task != current_task) {
      current_task = r.task;
      out += "\n## " + r.task + "\n\n";
      out += "| K | Method | Metric | Groups | Train | Test | Config |\n";
      out += "|---|--------|--------|--------|-------|------|--------|\n";
    }
    std::string test_cell = format_metric_cell(r.test_metric);
    if (is_best(r)) test_cell = "**" + test_cell + "**";
    out += "| " + std::to_string(r.k) + " | " + r.method + " | " +
           metric_name(r.metric) + " | " + std::to_string(r.group_count) +
           " | " + format_metric_cell(r.train_metric) + " | " + test_cell +
           " | " + r.config_digest + " |\n";

    // After the last row of a task block, add NE win notes (absolute and
    // relative, both labeled).
    bool task_ends = (i + 1 == rows.size()) || rows[i + 1].task != r.task;
    if (!task_ends) continue;
    std::string notes;
    std::set<std::size_t> ks;
    for (const auto& row : rows)
      if (row.task == r.task && row.metric == MetricKind::ne) ks.insert(row.k);
    for (std::size_t k : ks) {
      const EvaluationReport* best = nullptr;
      for (const auto& row : rows) {
        if (row.task != r.task || row.k != k || row.metric != MetricKind::ne)
          continue;
        if (!best || row.test_metric < best->test_metric) best = &row;
      }
      for (const auto& row : rows) {
        if (row.task != r.task || row.k != k || row.metric != MetricKind::ne)
          continue;
        if (&row == best) continue;
        double abs_win = row.test_metric - best->test_metric;
        double rel_win =
            row.test_metric != 0.0 ? 100.0 * abs_win / row.test_metric : 0.0;
        notes += "- NE win at K=" + std::to_string(k) + ": " + best->method +
                 " over " + row.method + ": " + format_number(abs_win) +
                 " absolute, " + format_number(rel_win) + "% relative\n";
      }
    }
    if (!notes.empty()) out += "\n" + notes;
  }
  return out;
}

std::vector<EvaluationReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EvaluationReport> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split_csv_record(line);
    if (fields.size() != 8)
      throw DataError("ParseError", "report CSV row needs 8 fields");
    EvaluationReport r;
    r.task = fields[0];
    r.k = std::stoul(fields[1]);
    r.method = fields[2];
    r.metric = metric_from_string(fields[3]);
    r.group_count = std::stoul(fields[4]);
    double v = 0.0;
    if (!parse_number(fields[5], v))
      throw DataError("ParseError", "bad train metric: " + fields[5]);
    r.train_metric = v;
    if (!parse_number(fields[6], v))
      throw DataError("ParseError", "bad test metric: " + fields[6]);
    r.test_metric = v;
    r.config_digest = fields[7];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvaluationReport> parse_report_markdown(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string task;
  std::vector<EvaluationReport> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("## ", 0) == 0) {
      task = line.substr(3);
      continue;
    }
    if (line.empty() || line[0] != '|') continue;
    std::vector<std::string> cells;
    std::string cell;
    for (std::size_t i = 1; i < line.size(); ++i) {
      if (line[i] == '|') {
        cells.push_back(std::string(trim(cell)));
        cell.clear();
      } else {
        cell.push_back(line[i]);
      }
    }
    if (cells.size() != 7) continue;
    if (cells[0] == "K") continue;  // header
    if (cells[0].find_first_not_of("-: ") == std::string::npos) continue;
    auto strip_bold = [](std::string s) {
      while (s.size() >= 2 && s.front() == '*' && s.back() == '*') {
        s = s.substr(1, s.size() - 2);
      }
      return s;
    };
    EvaluationReport r;
    r.task = task;
    r.k = std::stoul(cells[0]);
    r.method = cells[1];
    r.metric = metric_from_string(cells[2]);
    r.group_count = std::stoul(cells[3]);
    double v = 0.0;
    if (!parse_number(strip_bold(cells[4]), v))
      throw DataError("ParseError", "bad train metric: " + cells[4]);
    r.train_metric = v;
    if (!parse_number(strip_bold(cells[5]), v))
      throw DataError("ParseError", "bad test metric: " + cells[5]);
    r.test_metric = v;
    r.config_digest = cells[6];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mofa
