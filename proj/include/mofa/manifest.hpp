#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mofa {

// One manifest per artifact directory; digests are FNV-1a content hashes of
// the files as written, re-verifiable against disk.
struct RunManifest {
  std::string command_line;
  std::string config_path;    // empty when no config file was given
  std::string config_digest;  // digest of the effective configuration
  std::uint64_t seed = 0;
  std::string catalog_path;
  std::string catalog_digest;
  std::string started_at;
  std::string finished_at;
  // (path relative to the manifest's directory, content digest)
  std::vector<std::pair<std::string, std::string>> outputs;
};

std::string manifest_to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::string& dir);
RunManifest load_manifest(const std::string& path);

// Re-hashes every listed output; returns false and names the first mismatch.
bool verify_manifest(const RunManifest& manifest, const std::string& dir,
                     std::string* mismatch = nullptr);

}  // namespace mofa
