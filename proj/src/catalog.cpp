#include "mofa/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

using ordered_json = nlohmann::ordered_json;

const char* category_name(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::sparse: return "sparse";
    case FeatureCategory::dense: return "dense";
    case FeatureCategory::floating: return "float";
  }
  return "float";
}

std::optional<FeatureCategory> category_from_string(std::string_view s) {
  if (s == "sparse") return FeatureCategory::sparse;
  if (s == "dense") return FeatureCategory::dense;
  if (s == "float") return FeatureCategory::floating;
  return std::nullopt;
}

std::optional<double> FeatureRecord::numeric_meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) return std::nullopt;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  return std::nullopt;
}

void FeatureCatalog::add(FeatureRecord record) {
  if (record.name.empty())
    throw DataError("ParseError", "feature record with empty name");
  if (index_.count(record.name))
    throw DataError("DuplicateName", "duplicate feature name: " + record.name);
  index_.emplace(record.name, features_.size());
  features_.push_back(std::move(record));
}

bool FeatureCatalog::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

const FeatureRecord& FeatureCatalog::at(const std::string& name) const {
  return features_[position(name)];
}

std::size_t FeatureCatalog::position(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw DataError("UnknownFeature", "unknown feature: " + name);
  return it->second;
}

std::vector<std::string> FeatureCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::vector<double> Dataset::column(std::size_t col) const {
  std::vector<double> out(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, col);
  return out;
}

namespace {

MetaValue meta_from_json(const ordered_json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
  throw DataError("ParseError", "metadata values must be numbers or strings");
}

FeatureRecord record_from_json(const ordered_json& j, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> DataError {
    return DataError("ParseError",
                     "line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) throw fail("record is not a JSON object");
  if (!j.contains("name") || !j["name"].is_string())
    throw fail("missing required string field 'name'");
  if (!j.contains("description") || !j["description"].is_string())
    throw fail("missing required string field 'description'");

  FeatureRecord rec;
  rec.name = j["name"].get<std::string>();
  rec.description = j["description"].get<std::string>();
  if (rec.name.empty()) throw fail("'name' must be non-empty");
  if (j.contains("group") && !j["group"].is_null()) {
    if (!j["group"].is_string()) throw fail("'group' must be a string");
    rec.group = j["group"].get<std::string>();
  }
  if (j.contains("category") && !j["category"].is_null()) {
    if (!j["category"].is_string()) throw fail("'category' must be a string");
    auto cat = category_from_string(j["category"].get<std::string>());
    if (!cat)
      throw fail("'category' must be one of sparse|dense|float, got '" +
                 j["category"].get<std::string>() + "'");
    rec.category = *cat;
  }
  if (j.contains("metadata") && !j["metadata"].is_null()) {
    if (!j["metadata"].is_object()) throw fail("'metadata' must be an object");
    for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it) {
      try {
        rec.metadata[it.key()] = meta_from_json(it.value());
      } catch (const DataError&) {
        throw fail("metadata value for '" + it.key() +
                   "' must be a number or string");
      }
    }
  }
  return rec;
}

FeatureCatalog load_catalog_jsonl(const std::string& path) {
  std::string text = read_file(path);
  FeatureCatalog catalog;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError("ParseError", "line " + std::to_string(line_no) + ": " +
                                        e.what());
    }
    catalog.add(record_from_json(j, line_no));
  }
  if (catalog.size() == 0)
    throw DataError("EmptyCatalog", "no records in catalog: " + path);
  return catalog;
}

// Joins physical lines until quotes balance, so multi-line quoted fields work.
std::vector<std::string> read_csv_records(const std::string& text) {
  std::vector<std::string> records;
  std::string cur;
  bool in_quotes = false;
  for (char c : text) {
    if (c == '"') in_quotes = !in_quotes;
    if (c == '\n' && !in_quotes) {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      records.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    records.push_back(cur);
  }
  return records;
}

// Fixed column convention: name, description, group, category, then any
// number of metadata.* columns. Empty cells mean "absent".
FeatureCatalog load_catalog_csv(const std::string& path) {
  auto records = read_csv_records(read_file(path));
  if (records.empty()) throw DataError("EmptyCatalog", "empty file: " + path);
  auto header = split_csv_record(records[0]);
  if (header.size() < 2 || header[0] != "name" || header[1] != "description")
    throw DataError("ParseError",
                    "line 1: catalog CSV header must start with "
                    "name,description[,group,category,metadata.*]");
  std::vector<std::string> meta_keys(header.size());
  for (std::size_t c = 2; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == "group" || h == "category") continue;
    if (h.rfind("metadata.", 0) == 0) {
      meta_keys[c] = h.substr(9);
      if (meta_keys[c].empty())
        throw DataError("ParseError", "line 1: empty metadata column name");
    } else {
      throw DataError("ParseError", "line 1: unexpected catalog column '" + h +
                                        "'");
    }
  }

  FeatureCatalog catalog;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (trim(records[i]).empty()) continue;
    auto fields = split_csv_record(records[i]);
    std::size_t line_no = i + 1;
    if (fields.size() != header.size())
      throw DataError("ParseError",
                      "line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    FeatureRecord rec;
    rec.name = fields[0];
    rec.description = fields[1];
    if (rec.name.empty())
      throw DataError("ParseError",
                      "line " + std::to_string(line_no) + ": empty name");
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const std::string& cell = fields[c];
      if (cell.empty()) continue;
      if (header[c] == "group") {
        rec.group = cell;
      } else if (header[c] == "category") {
        auto cat = category_from_string(cell);
        if (!cat)
          throw DataError("ParseError", "line " + std::to_string(line_no) +
                                            ": bad category '" + cell + "'");
        rec.category = *cat;
      } else {
        // Numeric parse first, string fallback.
        double num = 0.0;
        if (parse_number(cell, num) && std::isfinite(num)) {
          rec.metadata[meta_keys[c]] = num;
        } else {
          rec.metadata[meta_keys[c]] = cell;
        }
      }
    }
    catalog.add(std::move(rec));
  }
  if (catalog.size() == 0)
    throw DataError("EmptyCatalog", "no records in catalog: " + path);
  return catalog;
}

}  // namespace

FeatureCatalog load_catalog(const std::string& path, CatalogFormat format) {
  switch (format) {
    case CatalogFormat::jsonl: return load_catalog_jsonl(path);
    case CatalogFormat::csv: return load_catalog_csv(path);
  }
  throw InternalError("BadFormat", "unhandled catalog format");
}

std::string catalog_to_jsonl(const FeatureCatalog& catalog) {
  std::string out;
  for (const auto& rec : catalog.features()) {
    ordered_json j;
    j["name"] = rec.name;
    j["description"] = rec.description;
    if (!rec.group.empty()) j["group"] = rec.group;
    if (rec.category) j["category"] = category_name(*rec.category);
    if (!rec.metadata.empty()) {
      ordered_json meta = ordered_json::object();
      for (const auto& [k, v] : rec.metadata) {
        if (const double* d = std::get_if<double>(&v)) meta[k] = *d;
        else meta[k] = std::get<std::string>(v);
      }
      j["metadata"] = meta;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_catalog(const FeatureCatalog& catalog, const std::string& path) {
  write_file(path, catalog_to_jsonl(catalog));
}

Dataset load_dataset(const std::string& path, const std::string& label_column) {
  auto records = read_csv_records(read_file(path));
  if (records.empty())
    throw DataError("ParseError", "empty dataset file: " + path);
  auto header = split_csv_record(records[0]);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_col = c;
      break;
    }
  }
  if (label_col == header.size())
    throw DataError("MissingColumn",
                    "label column '" + label_column + "' not in header");

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) ds.feature_names.push_back(header[c]);
  }
  ds.n_cols = ds.feature_names.size();

  for (std::size_t i = 1; i < records.size(); ++i) {
    if (trim(records[i]).empty()) continue;
    auto fields = split_csv_record(records[i]);
    std::size_t line_no = i + 1;
    if (fields.size() != header.size())
      throw DataError("RaggedRow", "line " + std::to_string(line_no) +
                                       ": expected " +
                                       std::to_string(header.size()) +
                                       " fields, got " +
                                       std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v))
        throw DataError("ParseError", "line " + std::to_string(line_no) +
                                          ": non-numeric value '" + fields[c] +
                                          "'");
      if (c == label_col) {
        if (v != 0.0 && v != 1.0)
          throw DataError("NonBinaryLabel",
                          "line " + std::to_string(line_no) +
                              ": label must be 0 or 1, got " + fields[c]);
        ds.labels.push_back(static_cast<int>(v));
      } else {
        if (!std::isfinite(v))
          throw DataError("ParseError", "line " + std::to_string(line_no) +
                                            ": non-finite value '" +
                                            fields[c] + "'");
        ds.values.push_back(v);
      }
    }
    ++ds.n_rows;
  }
  return ds;
}

std::string dataset_to_csv(const Dataset& dataset,
                           const std::string& label_column) {
  std::string out;
  for (const auto& name : dataset.feature_names) {
    out += csv_escape(name);
    out += ',';
  }
  out += csv_escape(label_column);
  out += '\n';
  for (std::size_t r = 0; r < dataset.n_rows; ++r) {
    for (std::size_t c = 0; c < dataset.n_cols; ++c) {
      out += format_number(dataset.at(r, c));
      out += ',';
    }
    out += dataset.labels[r] ? '1' : '0';
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::string& path,
                  const std::string& label_column) {
  write_file(path, dataset_to_csv(dataset, label_column));
}

Dataset project(const Dataset& dataset, const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& name : names) {
    auto it = std::find(dataset.feature_names.begin(),
                        dataset.feature_names.end(), name);
    if (it == dataset.feature_names.end())
      throw DataError("UnknownFeature", "unknown feature: " + name);
    cols.push_back(
        static_cast<std::size_t>(it - dataset.feature_names.begin()));
  }
  Dataset out;
  out.feature_names = names;
  out.labels = dataset.labels;
  out.n_rows = dataset.n_rows;
  out.n_cols = names.size();
  out.values.resize(out.n_rows * out.n_cols);
  for (std::size_t r = 0; r < out.n_rows; ++r)
    for (std::size_t c = 0; c < out.n_cols; ++c)
      out.at(r, c) = dataset.at(r, cols[c]);
  return out;
}

}  // namespace mofa
