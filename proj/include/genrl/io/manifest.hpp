#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace genrl::io {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a on bytes, the hash behind manifest ids and artifact digests.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a_file(const std::string& path);
std::string hash_hex(std::uint64_t hash);

// One record per command run. Input and output entries pair a path with
// the hex digest of the file's bytes; output paths are stored relative to
// the run's output directory so reruns into different directories agree on
// everything except wall_clock_seconds.
struct RunManifest {
  std::string command;
  std::string config_path;
  nlohmann::json config;  // resolved, with every default filled in
  std::uint64_t root_seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  double wall_clock_seconds = 0.0;
  std::string version = kVersion;

  // Digest of (command, resolved config, seed): the identity that output
  // artifacts embed. Independent of timing and file locations.
  std::string manifest_id() const;

  void add_input(const std::string& path);
  void add_output(const std::string& recorded_path, const std::string& actual_path);

  nlohmann::json to_json() const;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace genrl::io
