#include "procseed/manifest.hpp"

#include <sys/utsname.h>

#include <fstream>
#include <thread>

#include "procseed/errors.hpp"
#include "procseed/hash.hpp"

namespace procseed {

std::string host_fingerprint() {
  struct utsname u{};
  std::string s;
  if (uname(&u) == 0) {
    s = std::string(u.sysname) + " " + u.release + " " + u.machine;
  } else {
    s = "unknown";
  }
  s += " hw_threads=" +
       std::to_string(std::thread::hardware_concurrency());
  return s;
}

void add_artifact(RunManifest& m, const std::string& path) {
  m.artifact_hashes[path] = hex64(hash_file(path));
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["status"] = m.status;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["artifact_hashes"] = m.artifact_hashes;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["host"] = m.host;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  if (j.contains("tool_version"))
    m.tool_version = j["tool_version"].get<std::string>();
  if (j.contains("status")) m.status = j["status"].get<std::string>();
  if (j.contains("config")) m.config = j["config"];
  if (j.contains("seeds")) m.seeds = j["seeds"].get<std::vector<uint64_t>>();
  if (j.contains("artifact_hashes"))
    m.artifact_hashes =
        j["artifact_hashes"].get<std::map<std::string, std::string>>();
  if (j.contains("wall_clock_seconds"))
    m.wall_clock_seconds = j["wall_clock_seconds"].get<double>();
  if (j.contains("host")) m.host = j["host"].get<std::string>();
  return m;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << to_json(m).dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest: " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path);
  nlohmann::json j;
  in >> j;
  return manifest_from_json(j);
}

}  // namespace procseed
