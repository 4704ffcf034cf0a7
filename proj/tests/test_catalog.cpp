#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "mofa/catalog.hpp"
#include "mofa/errors.hpp"
#include "mofa/evaluation.hpp"
#include "mofa/util.hpp"

using namespace mofa;
namespace fs = std::filesystem;

namespace {

// Temp file that cleans up after itself.
struct TempFile {
  explicit TempFile(std::string_view contents) {
    path = (fs::temp_directory_path() /
            ("mofa_test_" + hex_digest(contents) + "_" +
             std::to_string(counter++)))
               .string();
    write_file(path, contents);
  }
  ~TempFile() { std::remove(path.c_str()); }
  std::string path;
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("minimal jsonl record loads with empty metadata") {
  TempFile f("{\"name\":\"p_click\",\"description\":\"predicted click prob\"}\n");
  auto catalog = load_catalog(f.path, CatalogFormat::jsonl);
  REQUIRE(catalog.size() == 1);
  CHECK(catalog.features()[0].name == "p_click");
  CHECK(catalog.features()[0].description == "predicted click prob");
  CHECK(catalog.features()[0].metadata.empty());
  CHECK(catalog.features()[0].group.empty());
  CHECK_FALSE(catalog.features()[0].category.has_value());
}

TEST_CASE("duplicate names are rejected") {
  TempFile f(
      "{\"name\":\"a\",\"description\":\"x\"}\n"
      "{\"name\":\"a\",\"description\":\"y\"}\n");
  try {
    load_catalog(f.path, CatalogFormat::jsonl);
    FAIL("expected DuplicateName");
  } catch (const Error& e) {
    CHECK(e.code() == "DuplicateName");
    CHECK(std::string(e.what()).find("a") != std::string::npos);
  }
}

TEST_CASE("bundled sample catalog holds 1030 records") {
  auto catalog = load_catalog(
      std::string(MOFA_DATA_DIR) + "/sample_catalog_1030.jsonl",
      CatalogFormat::jsonl);
  CHECK(catalog.size() == 1030);
}

TEST_CASE("empty and malformed catalogs raise typed errors") {
  TempFile empty("\n\n");
  CHECK_THROWS_AS(load_catalog(empty.path, CatalogFormat::jsonl), DataError);

  TempFile bad("{\"name\":\"a\",\"description\":\"x\"}\nnot json\n");
  try {
    load_catalog(bad.path, CatalogFormat::jsonl);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == "ParseError");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  TempFile badcat(
      "{\"name\":\"a\",\"description\":\"x\",\"category\":\"integer\"}\n");
  CHECK_THROWS_AS(load_catalog(badcat.path, CatalogFormat::jsonl), DataError);
}

TEST_CASE("csv catalog follows the fixed column convention") {
  TempFile f(
      "name,description,group,category,metadata.importance,metadata.owner\n"
      "f1,\"first, with comma\",g1,dense,0.5,team_a\n"
      "f2,second,,float,,team_b\n"
      "f3,third,g2,,0.25,\n");
  auto catalog = load_catalog(f.path, CatalogFormat::csv);
  REQUIRE(catalog.size() == 3);
  CHECK(catalog.at("f1").description == "first, with comma");
  CHECK(catalog.at("f1").category == FeatureCategory::dense);
  CHECK(catalog.at("f1").numeric_meta("importance") == 0.5);
  CHECK(std::get<std::string>(catalog.at("f1").metadata.at("owner")) ==
        "team_a");
  CHECK(catalog.at("f2").group.empty());
  CHECK_FALSE(catalog.at("f2").numeric_meta("importance").has_value());
  CHECK_FALSE(catalog.at("f3").category.has_value());
}

TEST_CASE("catalog save/load round-trips field by field") {
  FeatureCatalog original;
  FeatureRecord a;
  a.name = "alpha";
  a.description = "line with \"quotes\" and, commas";
  a.group = "g1";
  a.category = FeatureCategory::sparse;
  a.metadata["importance"] = 0.375;
  a.metadata["owner"] = "ranking";
  original.add(a);
  FeatureRecord b;
  b.name = "beta";
  b.description = "plain";
  original.add(b);

  TempFile f(catalog_to_jsonl(original));
  auto reloaded = load_catalog(f.path, CatalogFormat::jsonl);
  REQUIRE(reloaded.size() == original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& x = original.features()[i];
    const auto& y = reloaded.features()[i];
    CHECK(x.name == y.name);
    CHECK(x.description == y.description);
    CHECK(x.group == y.group);
    CHECK(x.category == y.category);
    CHECK(x.metadata == y.metadata);
  }
  // Serialization is a fixed point after one round trip.
  CHECK(catalog_to_jsonl(reloaded) == catalog_to_jsonl(original));
}

TEST_CASE("catalog index matches positions") {
  auto catalog = load_catalog(
      std::string(MOFA_DATA_DIR) + "/synth_small/catalog.jsonl",
      CatalogFormat::jsonl);
  for (std::size_t i = 0; i < catalog.size(); ++i)
    CHECK(catalog.position(catalog.features()[i].name) == i);
  CHECK_THROWS_AS(catalog.at("no_such_feature"), DataError);
}

TEST_CASE("dataset loads with label extraction") {
  TempFile f("x1,x2,y\n1,2,0\n3,4,1\n5,6,0\n");
  auto ds = load_dataset(f.path, "y");
  CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});
  CHECK(ds.n_rows == 3);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.at(1, 0) == 3);
  CHECK(ds.at(2, 1) == 6);
}

TEST_CASE("dataset loader rejects bad input") {
  TempFile nonbinary("x,y\n1,2\n");
  try {
    load_dataset(nonbinary.path, "y");
    FAIL("expected NonBinaryLabel");
  } catch (const Error& e) {
    CHECK(e.code() == "NonBinaryLabel");
  }

  TempFile missing("x,y\n1,0\n");
  try {
    load_dataset(missing.path, "label");
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == "MissingColumn");
  }

  TempFile ragged("x,z,y\n1,2,0\n1,0\n");
  try {
    load_dataset(ragged.path, "y");
    FAIL("expected RaggedRow");
  } catch (const Error& e) {
    CHECK(e.code() == "RaggedRow");
  }

  TempFile nan_row("x,y\nnan,0\n");
  CHECK_THROWS_AS(load_dataset(nan_row.path, "y"), DataError);
}

TEST_CASE("synthetic dataset round-trips bitwise through csv") {
  SyntheticSpec spec;
  spec.n_features = 7;
  spec.n_rows_train = 23;
  spec.n_rows_test = 5;
  spec.n_informative = 3;
  spec.seed = 99;
  auto data = generate_synthetic(spec);
  std::string text = dataset_to_csv(data.train);
  TempFile f(text);
  auto reloaded = load_dataset(f.path, "label");
  CHECK(dataset_to_csv(reloaded) == text);
  CHECK(reloaded.values == data.train.values);
  CHECK(reloaded.labels == data.train.labels);
}

TEST_CASE("project subsets, reorders and preserves labels") {
  TempFile f("x1,x2,x3,y\n1,2,3,0\n4,5,6,1\n");
  auto ds = load_dataset(f.path, "y");

  auto identity = project(ds, ds.feature_names);
  CHECK(identity.values == ds.values);
  CHECK(identity.labels == ds.labels);

  auto empty = project(ds, {});
  CHECK(empty.n_cols == 0);
  CHECK(empty.n_rows == 2);
  CHECK(empty.labels == ds.labels);

  auto swapped = project(ds, {"x2", "x1"});
  CHECK(swapped.at(0, 0) == 2);
  CHECK(swapped.at(0, 1) == 1);
  CHECK(swapped.at(1, 0) == 5);
  CHECK(swapped.at(1, 1) == 4);

  CHECK_THROWS_AS(project(ds, {"nope"}), DataError);
}

TEST_CASE("projection distributes over concatenation of disjoint name lists") {
  SyntheticSpec spec;
  spec.n_features = 9;
  spec.n_rows_train = 17;
  spec.n_rows_test = 3;
  spec.n_informative = 2;
  spec.seed = 5;
  auto data = generate_synthetic(spec);
  std::vector<std::string> s1 = {"feat_0003", "feat_0001", "feat_0008"};
  std::vector<std::string> s2 = {"feat_0000", "feat_0006"};
  std::vector<std::string> both = s1;
  both.insert(both.end(), s2.begin(), s2.end());

  auto joint = project(data.train, both);
  auto left = project(data.train, s1);
  auto right = project(data.train, s2);
  for (std::size_t r = 0; r < joint.n_rows; ++r) {
    for (std::size_t c = 0; c < s1.size(); ++c)
      CHECK(joint.at(r, c) == left.at(r, c));
    for (std::size_t c = 0; c < s2.size(); ++c)
      CHECK(joint.at(r, s1.size() + c) == right.at(r, c));
  }
}
