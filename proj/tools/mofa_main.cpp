// mofa: sequential, constraint-aware feature selection pipeline.
//
// Subcommands: ingest, select, evaluate, synth, pairs, report. Every run
// writes a manifest.json into --out with content digests of its artifacts.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mofa/baselines.hpp"
#include "mofa/catalog.hpp"
#include "mofa/errors.hpp"
#include "mofa/evaluation.hpp"
#include "mofa/llm_client.hpp"
#include "mofa/manifest.hpp"
#include "mofa/pairs.hpp"
#include "mofa/partition.hpp"
#include "mofa/prompting.hpp"
#include "mofa/selection.hpp"
#include "mofa/util.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void emit_error_record(mofa::ErrorClass cls, const std::string& code,
                       const std::string& message) {
  ordered_json j;
  ordered_json inner;
  inner["class"] = mofa::error_class_name(cls);
  inner["code"] = code;
  inner["message"] = message;
  j["error"] = inner;
  std::cerr << j.dump() << std::endl;
}

std::string join_command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    std::string arg = argv[i];
    if (arg.find(' ') != std::string::npos) out += '"' + arg + '"';
    else out += arg;
  }
  return out;
}

mofa::CatalogFormat infer_catalog_format(const std::string& path,
                                         const std::string& format_flag) {
  if (format_flag == "jsonl") return mofa::CatalogFormat::jsonl;
  if (format_flag == "csv") return mofa::CatalogFormat::csv;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return mofa::CatalogFormat::csv;
  return mofa::CatalogFormat::jsonl;
}

std::vector<mofa::Requirement> parse_requirements(
    const std::vector<std::string>& specs) {
  std::vector<mofa::Requirement> out;
  for (const auto& spec : specs) {
    std::string norm = mofa::to_lower(spec);
    std::replace(norm.begin(), norm.end(), '_', '-');
    if (norm == "group-consolidation") {
      out.push_back(mofa::make_group_consolidation_requirement());
    } else if (spec.rfind("capacity:", 0) == 0) {
      out.push_back({mofa::RequirementKind::capacity_note, spec.substr(9)});
    } else {
      out.push_back({mofa::RequirementKind::free_text, spec});
    }
  }
  return out;
}

struct OutputCollector {
  explicit OutputCollector(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }
  void write(const std::string& name, std::string_view contents) {
    std::string path = (fs::path(dir_) / name).string();
    mofa::write_file(path, contents);
    outputs.emplace_back(name, mofa::hex_digest(contents));
  }
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> outputs;
};

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string catalog_path;
  std::string format;
  std::size_t k = 0;
  std::size_t buckets = 1;
  double oversample_factor = 1.5;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  std::string backend = "mock-importance";
  std::string endpoint;
  std::string model;
  std::string api_key_env = "MOFA_API_KEY";
  std::string importance_key = "importance";
  std::string script;
  std::string objective;
  std::vector<std::string> requirements;
  std::size_t max_desc_chars = 240;
  std::string template_path;
  double timeout = 60.0;
  int max_retries = 3;
  std::uint64_t request_budget = 0;
  bool verbose_trace = false;
  std::string out_dir = "mofa-out";
  std::string config_path;
};

mofa::SelectionConfig to_selection_config(const SelectArgs& args) {
  mofa::SelectionConfig config;
  config.target_k = args.k;
  config.buckets = args.buckets;
  config.oversample_factor = args.oversample_factor;
  config.workers = args.workers;
  config.seed = args.seed;
  config.max_desc_chars = args.max_desc_chars;
  config.verbose_trace = args.verbose_trace;
  if (!args.objective.empty()) config.objective = args.objective;
  config.requirements = parse_requirements(args.requirements);
  config.backend.kind = mofa::backend_kind_from_string(args.backend);
  config.backend.endpoint_url = args.endpoint;
  config.backend.model_name = args.model;
  config.backend.api_key_env = args.api_key_env;
  config.backend.importance_key = args.importance_key;
  config.backend.script_path = args.script;
  config.backend.timeout_s = args.timeout;
  config.backend.max_retries = args.max_retries;
  config.backend.request_budget = args.request_budget;
  if (!args.template_path.empty())
    config.prompt_template = mofa::read_file(args.template_path);
  return config;
}

std::string selection_config_dump(const mofa::SelectionConfig& config) {
  ordered_json j;
  j["k"] = config.target_k;
  j["buckets"] = config.buckets;
  j["oversample_factor"] = config.oversample_factor;
  j["seed"] = config.seed;
  j["backend"] = mofa::backend_kind_name(config.backend.kind);
  j["endpoint"] = config.backend.endpoint_url;
  j["model"] = config.backend.model_name;
  j["objective"] = config.objective;
  ordered_json reqs = ordered_json::array();
  for (const auto& r : config.requirements) reqs.push_back(r.text);
  j["requirements"] = reqs;
  j["max_desc_chars"] = config.max_desc_chars;
  return j.dump();
}

int run_select(const SelectArgs& args, const std::string& command_line) {
  mofa::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.started_at = mofa::iso8601_utc_now();
  manifest.seed = args.seed;
  manifest.config_path = args.config_path;

  auto catalog = mofa::load_catalog(
      args.catalog_path, infer_catalog_format(args.catalog_path, args.format));
  manifest.catalog_path = args.catalog_path;
  manifest.catalog_digest = mofa::file_digest(args.catalog_path);

  mofa::SelectionConfig config = to_selection_config(args);
  manifest.config_digest = mofa::hex_digest(selection_config_dump(config));

  auto backend = mofa::make_backend(config.backend);
  mofa::PipelineResult result = mofa::run_pipeline(catalog, config, *backend);

  OutputCollector out(args.out_dir);
  ordered_json selected = ordered_json::array();
  for (const auto& name : result.final_selected) selected.push_back(name);
  out.write("selected.json", selected.dump(2) + "\n");
  out.write("trace.jsonl",
            mofa::serialize_trace(result.final_state.trace,
                                  config.verbose_trace));
  out.write("result.json", mofa::pipeline_to_json(result, config));

  manifest.finished_at = mofa::iso8601_utc_now();
  manifest.outputs = out.outputs;
  mofa::write_manifest(manifest, args.out_dir);

  std::cout << "selected " << result.final_selected.size() << " of "
            << catalog.size() << " features into " << args.out_dir
            << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string train_path;
  std::string test_path;
  std::string catalog_path;
  std::string format;
  std::string label_column = "label";
  std::string selected_path;
  std::vector<std::string> methods;
  std::vector<std::size_t> ks;
  std::string metric = "auc";
  double lasso_c = 0.1;
  std::uint64_t seed = 0;
  std::string task = "task";
  std::string out_dir = "mofa-out";
  std::string config_path;
};

int run_evaluate(const EvaluateArgs& args, const std::string& command_line) {
  mofa::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.started_at = mofa::iso8601_utc_now();
  manifest.seed = args.seed;
  manifest.config_path = args.config_path;

  auto catalog = mofa::load_catalog(
      args.catalog_path, infer_catalog_format(args.catalog_path, args.format));
  manifest.catalog_path = args.catalog_path;
  manifest.catalog_digest = mofa::file_digest(args.catalog_path);

  auto train = mofa::load_dataset(args.train_path, args.label_column);
  auto test = mofa::load_dataset(args.test_path, args.label_column);
  mofa::MetricKind metric = mofa::metric_from_string(args.metric);

  ordered_json cfg;
  cfg["task"] = args.task;
  cfg["metric"] = args.metric;
  cfg["lasso_c"] = args.lasso_c;
  cfg["seed"] = args.seed;
  cfg["methods"] = args.methods;
  cfg["ks"] = args.ks;
  std::string config_digest = mofa::hex_digest(cfg.dump());
  manifest.config_digest = config_digest;

  std::vector<std::string> mofa_selected;
  if (!args.selected_path.empty()) {
    ordered_json j = ordered_json::parse(mofa::read_file(args.selected_path));
    if (!j.is_array())
      throw mofa::DataError("ParseError",
                            "selected.json must be a JSON array of names");
    for (const auto& name : j) mofa_selected.push_back(name.get<std::string>());
  }

  mofa::FittedLinearModel lasso_model;
  bool lasso_fitted = false;

  std::vector<mofa::EvaluationReport> reports;
  for (const auto& method : args.methods) {
    for (std::size_t k : args.ks) {
      std::vector<std::string> selected;
      if (method == "mofa") {
        if (mofa_selected.empty())
          throw mofa::ConfigError("InvalidConfig",
                                  "--selected is required for method mofa");
        if (mofa_selected.size() < k)
          throw mofa::ConfigError(
              "KTooLarge", "selected.json holds " +
                               std::to_string(mofa_selected.size()) +
                               " names, need k=" + std::to_string(k));
        selected.assign(mofa_selected.begin(), mofa_selected.begin() + k);
      } else if (method == "lasso") {
        if (!lasso_fitted) {
          mofa::LassoConfig lasso_cfg;
          lasso_cfg.c = args.lasso_c;
          lasso_model = mofa::fit_l1_logistic(train, lasso_cfg);
          lasso_fitted = true;
        }
        std::string warning;
        selected = mofa::lasso_top_k(lasso_model, k, &warning);
        if (!warning.empty()) std::cerr << "lasso: " << warning << std::endl;
      } else if (method == "random") {
        selected = mofa::random_select(
            train.feature_names, k,
            mofa::derive_seed(args.seed, "random:" + std::to_string(k)));
      } else {
        throw mofa::ConfigError("InvalidMethod",
                                "unknown method: " + method +
                                    " (expected mofa|lasso|random)");
      }

      auto [train_metric, test_metric] =
          mofa::train_eval_metric(train, test, selected, metric);
      mofa::EvaluationReport report;
      report.task = args.task;
      report.k = k;
      report.method = method;
      report.group_count = mofa::group_count(selected, catalog);
      report.train_metric = train_metric;
      report.test_metric = test_metric;
      report.metric = metric;
      report.selected = selected;
      report.config_digest = config_digest;
      reports.push_back(std::move(report));
    }
  }

  OutputCollector out(args.out_dir);
  out.write("report.md", mofa::render_report(reports, mofa::ReportFormat::markdown));
  out.write("report.csv", mofa::render_report(reports, mofa::ReportFormat::csv));

  manifest.finished_at = mofa::iso8601_utc_now();
  manifest.outputs = out.outputs;
  mofa::write_manifest(manifest, args.out_dir);

  std::cout << "wrote " << reports.size() << " report rows into "
            << args.out_dir << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::size_t features = 100;
  std::size_t informative = 10;
  std::size_t groups = 4;
  std::size_t rows_train = 1000;
  std::size_t rows_test = 500;
  double noise = 0.5;
  std::uint64_t seed = 0;
  std::string out_dir = "mofa-out";
};

int run_synth(const SynthArgs& args, const std::string& command_line) {
  mofa::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.started_at = mofa::iso8601_utc_now();
  manifest.seed = args.seed;

  mofa::SyntheticSpec spec;
  spec.n_features = args.features;
  spec.n_informative = args.informative;
  spec.n_groups = args.groups;
  spec.n_rows_train = args.rows_train;
  spec.n_rows_test = args.rows_test;
  spec.noise_sigma = args.noise;
  spec.seed = args.seed;

  ordered_json cfg;
  cfg["features"] = args.features;
  cfg["informative"] = args.informative;
  cfg["groups"] = args.groups;
  cfg["rows_train"] = args.rows_train;
  cfg["rows_test"] = args.rows_test;
  cfg["noise"] = args.noise;
  cfg["seed"] = args.seed;
  manifest.config_digest = mofa::hex_digest(cfg.dump());

  mofa::SyntheticData data = mofa::generate_synthetic(spec);

  OutputCollector out(args.out_dir);
  out.write("catalog.jsonl", mofa::catalog_to_jsonl(data.catalog));
  out.write("train.csv", mofa::dataset_to_csv(data.train));
  out.write("test.csv", mofa::dataset_to_csv(data.test));
  ordered_json truth = ordered_json::array();
  for (const auto& name : data.truth) truth.push_back(name);
  out.write("truth.json", truth.dump(2) + "\n");

  manifest.catalog_path = (fs::path(args.out_dir) / "catalog.jsonl").string();
  manifest.catalog_digest = out.outputs[0].second;
  manifest.finished_at = mofa::iso8601_utc_now();
  manifest.outputs = out.outputs;
  mofa::write_manifest(manifest, args.out_dir);

  std::cout << "synthetic corpus with " << args.features << " features ("
            << args.informative << " informative) in " << args.out_dir
            << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// pairs

struct PairsArgs {
  std::string signals_path;
  std::string out_dir = "mofa-out";
};

int run_pairs(const PairsArgs& args, const std::string& command_line) {
  mofa::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.started_at = mofa::iso8601_utc_now();

  mofa::SignalTable table = mofa::load_signal_table(args.signals_path);
  auto [pool, catalog] = mofa::build_pair_pool(table);

  OutputCollector out(args.out_dir);
  out.write("pair_catalog.jsonl", mofa::catalog_to_jsonl(catalog));

  manifest.catalog_path =
      (fs::path(args.out_dir) / "pair_catalog.jsonl").string();
  manifest.catalog_digest = out.outputs[0].second;
  manifest.finished_at = mofa::iso8601_utc_now();
  manifest.outputs = out.outputs;
  mofa::write_manifest(manifest, args.out_dir);

  std::cout << pool.size() << " signal pairs from "
            << table.signal_names.size() << " signals in " << args.out_dir
            << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// ingest / report

struct IngestArgs {
  std::string catalog_path;
  std::string format;
  std::string out_path;
};

int run_ingest(const IngestArgs& args) {
  auto catalog = mofa::load_catalog(
      args.catalog_path, infer_catalog_format(args.catalog_path, args.format));
  std::set<std::string> groups;
  for (const auto& rec : catalog.features())
    if (!rec.group.empty()) groups.insert(rec.group);
  std::cout << "catalog: " << catalog.size() << " features, " << groups.size()
            << " groups" << std::endl;
  if (!args.out_path.empty()) {
    mofa::save_catalog(catalog, args.out_path);
    std::cout << "normalized catalog written to " << args.out_path
              << std::endl;
  }
  return 0;
}

struct ReportArgs {
  std::string in_path;
  std::string to = "markdown";
  std::string out_dir = "mofa-out";
};

int run_report(const ReportArgs& args, const std::string& command_line) {
  std::vector<mofa::EvaluationReport> rows;
  std::string text = mofa::read_file(args.in_path);
  bool from_markdown =
      args.in_path.size() >= 3 &&
      args.in_path.substr(args.in_path.size() - 3) == ".md";
  rows = from_markdown ? mofa::parse_report_markdown(text)
                       : mofa::parse_report_csv(text);

  mofa::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.started_at = mofa::iso8601_utc_now();

  OutputCollector out(args.out_dir);
  if (args.to == "markdown" || args.to == "md") {
    out.write("report.md",
              mofa::render_report(rows, mofa::ReportFormat::markdown));
  } else if (args.to == "csv") {
    out.write("report.csv", mofa::render_report(rows, mofa::ReportFormat::csv));
  } else {
    throw mofa::ConfigError("InvalidConfig",
                            "--to must be markdown or csv, got " + args.to);
  }
  manifest.finished_at = mofa::iso8601_utc_now();
  manifest.outputs = out.outputs;
  mofa::write_manifest(manifest, args.out_dir);
  std::cout << "converted " << rows.size() << " rows into " << args.out_dir
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mofa: sequential, constraint-aware feature selection"};
  app.require_subcommand(1);
  std::string command_line = join_command_line(argc, argv);

  SelectArgs select_args;
  auto* select = app.add_subcommand(
      "select", "Run the two-phase sequential selection pipeline");
  select->add_option("--catalog", select_args.catalog_path,
                     "Feature catalog (JSONL or CSV)")->required();
  select->add_option("--format", select_args.format,
                     "Catalog format override: jsonl|csv");
  select->add_option("--k", select_args.k, "Target number of features")
      ->required();
  select->add_option("--buckets", select_args.buckets,
                     "Number of disjoint buckets B (default 1)");
  select->add_option("--oversample-factor", select_args.oversample_factor,
                     "Phase-1 target multiplier (default 1.5)");
  select->add_option("--workers", select_args.workers,
                     "Max concurrent bucket workers (0 = auto)");
  select->add_option("--seed", select_args.seed, "Run seed (default 0)");
  select->add_option("--backend", select_args.backend,
                     "remote|mock-importance|mock-scripted")
      ->check(CLI::IsMember(
          {"remote", "mock-importance", "mock-scripted", "mock_importance",
           "mock_scripted"}));
  select->add_option("--endpoint", select_args.endpoint,
                     "Chat-completions endpoint URL (remote)");
  select->add_option("--model", select_args.model, "Model name (remote)");
  select->add_option("--api-key-env", select_args.api_key_env,
                     "Env var holding the API credential");
  select->add_option("--importance-key", select_args.importance_key,
                     "Metadata key read by mock-importance");
  select->add_option("--script", select_args.script,
                     "Response script file (mock-scripted)");
  select->add_option("--objective", select_args.objective,
                     "Objective text rendered into every prompt");
  select->add_option("--requirements", select_args.requirements,
                     "Auxiliary requirement: group-consolidation, "
                     "capacity:<text>, or free text");
  select->add_option("--max-desc-chars", select_args.max_desc_chars,
                     "Description truncation bound (default 240)");
  select->add_option("--template", select_args.template_path,
                     "Prompt template override file");
  select->add_option("--timeout", select_args.timeout,
                     "Per-request timeout seconds (remote)");
  select->add_option("--max-retries", select_args.max_retries,
                     "Transport retries on 429/5xx/timeout");
  select->add_option("--request-budget", select_args.request_budget,
                     "Abort after this many remote requests (0 = unlimited)");
  select->add_flag("--verbose-trace", select_args.verbose_trace,
                   "Include raw backend responses in traces");
  select->add_option("--out", select_args.out_dir, "Artifact directory");
  select->set_config("--config", "", "Key-value config file; flags override");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Train and score downstream models on selected subsets");
  evaluate->add_option("--train", eval_args.train_path, "Training CSV")
      ->required();
  evaluate->add_option("--test", eval_args.test_path, "Test CSV")->required();
  evaluate->add_option("--catalog", eval_args.catalog_path,
                       "Catalog (for group counts)")->required();
  evaluate->add_option("--format", eval_args.format,
                       "Catalog format override: jsonl|csv");
  evaluate->add_option("--label-column", eval_args.label_column,
                       "Label column name (default: label)");
  evaluate->add_option("--selected", eval_args.selected_path,
                       "selected.json from a select run (method mofa)");
  evaluate->add_option("--method", eval_args.methods,
                       "mofa|lasso|random (repeatable)")->required();
  evaluate->add_option("--k", eval_args.ks, "Subset size (repeatable)")
      ->required();
  evaluate->add_option("--metric", eval_args.metric, "auc|ne")
      ->check(CLI::IsMember({"auc", "ne"}));
  evaluate->add_option("--lasso-c", eval_args.lasso_c,
                       "Inverse regularization strength (default 0.1)");
  evaluate->add_option("--seed", eval_args.seed, "Seed for method random");
  evaluate->add_option("--task", eval_args.task, "Task label in reports");
  evaluate->add_option("--out", eval_args.out_dir, "Artifact directory");
  evaluate->set_config("--config", "", "Key-value config file; flags override");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "Generate a planted synthetic classification corpus");
  synth->add_option("--features", synth_args.features, "Feature count");
  synth->add_option("--informative", synth_args.informative,
                    "Planted informative feature count");
  synth->add_option("--groups", synth_args.groups, "Feature group count");
  synth->add_option("--rows-train", synth_args.rows_train, "Training rows");
  synth->add_option("--rows-test", synth_args.rows_test, "Test rows");
  synth->add_option("--noise", synth_args.noise, "Label noise sigma");
  synth->add_option("--seed", synth_args.seed, "Generator seed");
  synth->add_option("--out", synth_args.out_dir, "Artifact directory");

  PairsArgs pairs_args;
  auto* pairs = app.add_subcommand(
      "pairs", "Build the signal-pair candidate pool with correlations");
  pairs->add_option("--signals", pairs_args.signals_path,
                    "Signal table CSV (outcome_* columns are outcomes)")
      ->required();
  pairs->add_option("--out", pairs_args.out_dir, "Artifact directory");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest", "Validate a catalog and optionally normalize it to JSONL");
  ingest->add_option("--catalog", ingest_args.catalog_path, "Catalog file")
      ->required();
  ingest->add_option("--format", ingest_args.format,
                     "Catalog format override: jsonl|csv");
  ingest->add_option("--out", ingest_args.out_path,
                     "Write normalized JSONL here");

  ReportArgs report_args;
  auto* report = app.add_subcommand(
      "report", "Convert evaluation reports between CSV and markdown");
  report->add_option("--in", report_args.in_path, "report.csv or report.md")
      ->required();
  report->add_option("--to", report_args.to, "markdown|csv");
  report->add_option("--out", report_args.out_dir, "Artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error_record(mofa::ErrorClass::config, "CliParse", e.what());
    return 2;
  }

  try {
    if (select->parsed()) {
      select_args.config_path = select->get_config_ptr()->as<std::string>();
      return run_select(select_args, command_line);
    }
    if (evaluate->parsed()) {
      eval_args.config_path = evaluate->get_config_ptr()->as<std::string>();
      return run_evaluate(eval_args, command_line);
    }
    if (synth->parsed()) return run_synth(synth_args, command_line);
    if (pairs->parsed()) return run_pairs(pairs_args, command_line);
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (report->parsed()) return run_report(report_args, command_line);
  } catch (const mofa::Error& e) {
    emit_error_record(e.error_class(), e.code(), e.what());
    return mofa::exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    emit_error_record(mofa::ErrorClass::internal, "Unhandled", e.what());
    return 5;
  }
  return 0;
}
