#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace mofa {

enum class FeatureCategory { sparse, dense, floating };

const char* category_name(FeatureCategory c);
std::optional<FeatureCategory> category_from_string(std::string_view s);

// Metadata values are numeric when they parse as numbers, text otherwise.
using MetaValue = std::variant<double, std::string>;

// std::map keeps metadata keys sorted, which fixes serialization and prompt
// rendering order.
using Metadata = std::map<std::string, MetaValue>;

struct FeatureRecord {
  std::string name;
  std::string description;
  std::string group;  // empty = no group
  std::optional<FeatureCategory> category;
  Metadata metadata;

  // Numeric metadata lookup; nullopt when missing or textual.
  std::optional<double> numeric_meta(const std::string& key) const;
};

class FeatureCatalog {
 public:
  FeatureCatalog() = default;

  // Rejects empty or duplicate names.
  void add(FeatureRecord record);

  const std::vector<FeatureRecord>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  bool contains(const std::string& name) const;
  // Throws DataError(UnknownFeature) when absent.
  const FeatureRecord& at(const std::string& name) const;
  std::size_t position(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::vector<FeatureRecord> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<double> values;  // row-major, n_rows x n_cols
  std::vector<int> labels;     // 0/1, size n_rows
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;

  double at(std::size_t row, std::size_t col) const {
    return values[row * n_cols + col];
  }
  double& at(std::size_t row, std::size_t col) {
    return values[row * n_cols + col];
  }
  std::vector<double> column(std::size_t col) const;
};

enum class CatalogFormat { jsonl, csv };

FeatureCatalog load_catalog(const std::string& path, CatalogFormat format);
// Inverse of load_catalog for JSONL; load(save(c)) preserves every record
// field-by-field.
std::string catalog_to_jsonl(const FeatureCatalog& catalog);
void save_catalog(const FeatureCatalog& catalog, const std::string& path);

Dataset load_dataset(const std::string& path, const std::string& label_column);
std::string dataset_to_csv(const Dataset& dataset,
                           const std::string& label_column = "label");
void save_dataset(const Dataset& dataset, const std::string& path,
                  const std::string& label_column = "label");

// Columns reordered/subset to `names`; labels untouched.
Dataset project(const Dataset& dataset, const std::vector<std::string>& names);

}  // namespace mofa
