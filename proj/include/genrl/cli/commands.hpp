#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genrl/io/manifest.hpp"

namespace genrl::cli {

struct CommandArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config's seed when set
  std::string out_dir = ".";
  std::vector<std::string> metrics;   // eval: subset of {pr, dipr, dwpr, l3}; empty = all
  std::size_t jobs = 1;               // train-model grid parallelism
};

// Commands are plain functions over files: each reads one JSON config,
// writes its artifacts plus a manifest.json into out_dir, and returns the
// manifest. Errors surface as exceptions; the binary maps them to exit
// codes (ContractError 2, NumericError 3, MissingArtifactError 4).
io::RunManifest run_gen_data(const CommandArgs& args);
io::RunManifest run_train_model(const CommandArgs& args);
io::RunManifest run_eval(const CommandArgs& args);
io::RunManifest run_train_policy(const CommandArgs& args);
io::RunManifest run_correlate(const CommandArgs& args);
io::RunManifest run_report(const CommandArgs& args);

}  // namespace genrl::cli
