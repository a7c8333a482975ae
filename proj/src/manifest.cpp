#include "genrl/io/manifest.hpp"

#include <array>
#include <charconv>

#include "genrl/io/json_io.hpp"

namespace genrl::io {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t fnv1a_file(const std::string& path) { return fnv1a(read_text(path)); }

std::string hash_hex(std::uint64_t hash) {
  std::array<char, 16> buf{};
  for (int i = 15; i >= 0; --i) {
    buf[static_cast<std::size_t>(i)] = "0123456789abcdef"[hash & 0xF];
    hash >>= 4;
  }
  return std::string(buf.data(), buf.size());
}

std::string RunManifest::manifest_id() const {
  const std::string key =
      command + "\n" + config.dump() + "\n" + std::to_string(root_seed);
  return hash_hex(fnv1a(key));
}

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, hash_hex(fnv1a_file(path)));
}

void RunManifest::add_output(const std::string& recorded_path, const std::string& actual_path) {
  outputs.emplace_back(recorded_path, hash_hex(fnv1a_file(actual_path)));
}

nlohmann::json RunManifest::to_json() const {
  const auto entries = [](const std::vector<std::pair<std::string, std::string>>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [path, hash] : list)
      arr.push_back(nlohmann::json{{"path", path}, {"hash", hash}});
    return arr;
  };
  return nlohmann::json{{"manifest_id", manifest_id()},
                        {"command", command},
                        {"config_path", config_path},
                        {"config", config},
                        {"root_seed", root_seed},
                        {"inputs", entries(inputs)},
                        {"outputs", entries(outputs)},
                        {"wall_clock_seconds", wall_clock_seconds},
                        {"version", version}};
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_json(path, manifest.to_json());
}

}  // namespace genrl::io
