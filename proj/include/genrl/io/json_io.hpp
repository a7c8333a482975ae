#pragma once

#include <string>

#include <json.hpp>

#include "genrl/genmodels/infogan.hpp"
#include "genrl/genmodels/vae.hpp"
#include "genrl/numkit/mlp.hpp"
#include "genrl/trajenv/dataset.hpp"

namespace genrl::io {

using nlohmann::json;

// Weight schema: {layer_dims, activations, weights, biases, batch_norm}.
// weights[l] is out x in nested arrays, biases[l] is out, batch_norm[l] is
// null or {gamma, beta, running_mean, running_var, momentum, eps}. Doubles
// serialize shortest-round-trip, so a load after save is bit-exact.
json mlp_to_json(const numkit::Mlp& net);
numkit::Mlp mlp_from_json(const json& j);

std::string activation_name(numkit::Activation act);
numkit::Activation activation_from_name(const std::string& name);

// Generic file plumbing. Reads throw MissingArtifactError when the file is
// absent or unreadable and ContractError when it is not valid JSON.
json load_json(const std::string& path);
void write_json(const std::string& path, const json& j);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

// Model file: weight blocks per net plus a header {model_kind, model_id,
// manifest_id, prior, traj_shape, hyperparams}.
struct ModelFile {
  std::string model_kind;  // "vae" | "infogan"
  std::string model_id;
  std::string manifest_id;
  json hyperparams;
  genmodels::VaeModel vae;          // populated when model_kind == "vae"
  genmodels::InfoGanModel infogan;  // populated when model_kind == "infogan"

  const genmodels::GenerativeModel& gen() const;
};

void save_model(const std::string& path, const genmodels::VaeModel& model,
                const std::string& model_id, const std::string& manifest_id,
                const json& hyperparams);
void save_model(const std::string& path, const genmodels::InfoGanModel& model,
                const std::string& model_id, const std::string& manifest_id,
                const json& hyperparams);
ModelFile load_model(const std::string& path);

// Dataset file: {manifest_id, manifest, horizon, action_dim, goal_region,
// trajectories, end_states} with trajectories as count x horizon x
// action_dim nested arrays.
void save_dataset(const std::string& path, const trajenv::TrajectoryDataset& data,
                  const std::string& manifest_id);
trajenv::TrajectoryDataset load_dataset(const std::string& path);

// Single-net weight file (policy or value function): the weight schema at
// the top level plus a manifest_id field.
void save_net(const std::string& path, const numkit::Mlp& net, const std::string& manifest_id);
numkit::Mlp load_net(const std::string& path);

}  // namespace genrl::io
