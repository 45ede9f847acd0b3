#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace procseed {

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record written next to every run's outputs. Every file
// the run produced is listed with its content hash; re-running the same
// resolved config and seeds must reproduce metric files bit-exactly.
struct RunManifest {
  nlohmann::json config = nlohmann::json::object();  // resolved snapshot
  std::vector<uint64_t> seeds;
  std::map<std::string, std::string> artifact_hashes;  // path -> fnv1a64 hex
  std::string tool_version = kToolVersion;
  double wall_clock_seconds = 0.0;
  std::string host;
  std::string status = "ok";  // "ok" or "failed: <reason>"
};

std::string host_fingerprint();

// Hashes the file and records it under its path.
void add_artifact(RunManifest& m, const std::string& path);

nlohmann::ordered_json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

}  // namespace procseed
