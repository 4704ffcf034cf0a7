#include "mofa/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

std::size_t SignalTable::signal_index(const std::string& name) const {
  auto it = std::find(signal_names.begin(), signal_names.end(), name);
  if (it == signal_names.end())
    throw DataError("UnknownSignal", "unknown signal: " + name);
  return static_cast<std::size_t>(it - signal_names.begin());
}

std::vector<double> SignalTable::signal_column(const std::string& name) const {
  std::size_t idx = signal_index(name);
  std::vector<double> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, idx);
  return out;
}

SignalTable load_signal_table(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw DataError("ParseError", "empty signal table: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_record(line);

  constexpr std::string_view kOutcomePrefix = "outcome_";
  std::vector<std::size_t> signal_cols;
  std::vector<std::pair<std::size_t, std::string>> outcome_cols;
  SignalTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].rfind(kOutcomePrefix, 0) == 0) {
      outcome_cols.emplace_back(c, header[c].substr(kOutcomePrefix.size()));
    } else {
      signal_cols.push_back(c);
      table.signal_names.push_back(header[c]);
    }
  }
  if (table.signal_names.size() < 2)
    throw DataError("TooFewSignals",
                    "need at least 2 signal columns, got " +
                        std::to_string(table.signal_names.size()));

  for (const auto& [col, name] : outcome_cols) table.outcomes[name] = {};

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_record(line);
    if (fields.size() != header.size())
      throw DataError("RaggedRow",
                      "line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields");
    for (std::size_t c : signal_cols) {
      double v = 0.0;
      if (!parse_number(fields[c], v) || !std::isfinite(v))
        throw DataError("ParseError", "line " + std::to_string(line_no) +
                                          ": bad signal value '" + fields[c] +
                                          "'");
      if (v < 0.0 || v > 1.0)
        throw DataError("SignalOutOfRange",
                        "line " + std::to_string(line_no) + ": signal '" +
                            header[c] + "' = " + fields[c] +
                            " outside [0, 1]");
      table.values.push_back(v);
    }
    for (const auto& [col, name] : outcome_cols) {
      double v = 0.0;
      if (!parse_number(fields[col], v) || !std::isfinite(v))
        throw DataError("ParseError", "line " + std::to_string(line_no) +
                                          ": bad outcome value '" +
                                          fields[col] + "'");
      table.outcomes[name].push_back(v);
    }
    ++table.n_rows;
  }
  if (table.n_rows < 3)
    throw DataError("TooFewRows", "need at least 3 rows, got " +
                                      std::to_string(table.n_rows));
  return table;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DataError("LengthMismatch", "pearson inputs differ in length");
  if (x.size() < 3)
    throw DataError("TooFewRows", "pearson needs at least 3 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DataError("ZeroVariance", "constant series has no correlation");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

bool is_constant(const std::vector<double>& v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

// 0.0 on degenerate inputs; the caller records the marker.
double safe_pearson(const std::vector<double>& x, const std::vector<double>& y,
                    bool& degenerate) {
  if (is_constant(x) || is_constant(y)) {
    degenerate = true;
    return 0.0;
  }
  return pearson(x, y);
}

}  // namespace

std::pair<std::vector<PairCandidate>, FeatureCatalog> build_pair_pool(
    const SignalTable& table) {
  if (table.signal_names.size() < 2)
    throw DataError("TooFewSignals", "need at least 2 signals");
  if (table.n_rows < 3)
    throw DataError("TooFewRows", "need at least 3 rows");

  std::vector<std::string> sorted_names = table.signal_names;
  std::sort(sorted_names.begin(), sorted_names.end());

  std::vector<PairCandidate> pool;
  FeatureCatalog catalog;
  for (std::size_t i = 0; i < sorted_names.size(); ++i) {
    std::vector<double> left_col = table.signal_column(sorted_names[i]);
    for (std::size_t j = i + 1; j < sorted_names.size(); ++j) {
      std::vector<double> right_col = table.signal_column(sorted_names[j]);
      std::vector<double> product(table.n_rows);
      for (std::size_t r = 0; r < table.n_rows; ++r)
        product[r] = left_col[r] * right_col[r];

      PairCandidate cand;
      cand.left = sorted_names[i];
      cand.right = sorted_names[j];
      std::vector<std::string> degenerates;
      for (const auto& [outcome, values] : table.outcomes) {
        bool deg_left = false, deg_right = false, deg_prod = false;
        cand.metadata["corr_" + cand.left + "_" + outcome] =
            safe_pearson(left_col, values, deg_left);
        cand.metadata["corr_" + cand.right + "_" + outcome] =
            safe_pearson(right_col, values, deg_right);
        cand.metadata["corr_product_" + outcome] =
            safe_pearson(product, values, deg_prod);
        if (deg_left) degenerates.push_back(cand.left);
        if (deg_right) degenerates.push_back(cand.right);
        if (deg_prod) degenerates.push_back("product");
      }
      cand.metadata["coverage"] = 1.0;
      if (!degenerates.empty()) {
        std::sort(degenerates.begin(), degenerates.end());
        degenerates.erase(
            std::unique(degenerates.begin(), degenerates.end()),
            degenerates.end());
        std::string marker;
        for (std::size_t d = 0; d < degenerates.size(); ++d) {
          if (d) marker += ',';
          marker += degenerates[d];
        }
        cand.metadata["degenerate"] = marker;
      }

      FeatureRecord rec;
      rec.name = cand.name();
      rec.description = "multiplicative interaction of " + cand.left +
                        " and " + cand.right;
      rec.metadata = cand.metadata;
      catalog.add(std::move(rec));
      pool.push_back(std::move(cand));
    }
  }
  return {std::move(pool), std::move(catalog)};
}

std::vector<double> eval_value_model(const ValueModelSpec& spec,
                                     const SignalTable& table) {
  std::vector<std::size_t> linear_idx;
  std::vector<double> linear_w;
  for (const auto& [name, w] : spec.linear_weights) {
    linear_idx.push_back(table.signal_index(name));
    linear_w.push_back(w);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
  std::vector<double> pair_w;
  for (const auto& [names, w] : spec.pair_weights) {
    pair_idx.emplace_back(table.signal_index(names.first),
                          table.signal_index(names.second));
    pair_w.push_back(w);
  }

  std::vector<double> scores(table.n_rows, 0.0);
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < linear_idx.size(); ++i)
      s += linear_w[i] * table.at(r, linear_idx[i]);
    for (std::size_t i = 0; i < pair_idx.size(); ++i)
      s += pair_w[i] * table.at(r, pair_idx[i].first) *
           table.at(r, pair_idx[i].second);
    scores[r] = s;
  }
  return scores;
}

}  // namespace mofa
