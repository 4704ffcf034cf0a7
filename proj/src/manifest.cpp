#include "mofa/manifest.hpp"

#include <filesystem>

#include <nlohmann/json.hpp>

#include "mofa/errors.hpp"
#include "mofa/util.hpp"

namespace mofa {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string manifest_to_json(const RunManifest& manifest) {
  ordered_json j;
  j["command_line"] = manifest.command_line;
  j["config_path"] = manifest.config_path;
  j["config_digest"] = manifest.config_digest;
  j["seed"] = manifest.seed;
  j["catalog_path"] = manifest.catalog_path;
  j["catalog_digest"] = manifest.catalog_digest;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  ordered_json outputs = ordered_json::array();
  for (const auto& [path, digest] : manifest.outputs) {
    ordered_json entry;
    entry["path"] = path;
    entry["digest"] = digest;
    outputs.push_back(std::move(entry));
  }
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& dir) {
  write_file((fs::path(dir) / "manifest.json").string(),
             manifest_to_json(manifest));
}

RunManifest load_manifest(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw DataError("ParseError", std::string("bad manifest: ") + e.what());
  }
  RunManifest m;
  m.command_line = j.value("command_line", "");
  m.config_path = j.value("config_path", "");
  m.config_digest = j.value("config_digest", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.catalog_path = j.value("catalog_path", "");
  m.catalog_digest = j.value("catalog_digest", "");
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  if (j.contains("outputs")) {
    for (const auto& entry : j["outputs"]) {
      m.outputs.emplace_back(entry.value("path", ""),
                             entry.value("digest", ""));
    }
  }
  return m;
}

bool verify_manifest(const RunManifest& manifest, const std::string& dir,
                     std::string* mismatch) {
  for (const auto& [path, digest] : manifest.outputs) {
    std::string full = (fs::path(dir) / path).string();
    std::string actual;
    try {
      actual = file_digest(full);
    } catch (const Error&) {
      if (mismatch) *mismatch = path + ": missing";
      return false;
    }
    if (actual != digest) {
      if (mismatch)
        *mismatch = path + ": expected " + digest + ", got " + actual;
      return false;
    }
  }
  return true;
}

}  // namespace mofa
