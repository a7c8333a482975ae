#pragma once

#include <cstdint>
#include <string>

#include "genrl/trajenv/environment.hpp"

namespace genrl::trajenv {

struct DatasetManifest {
  std::uint64_t seed = 0;
  double noise_scale = 0.0;
  std::size_t count = 0;
  std::string env_kind = "linear";
};

// Demonstration corpus: flattened trajectories plus cached end states.
// Row layout matches exe(): entry t * action_dim + m.
struct TrajectoryDataset {
  std::size_t horizon = 0;
  std::size_t action_dim = 0;
  Matrix trajectories;  // count x (horizon * action_dim)
  Matrix end_states;    // count x 2, always equal to exe() of the row
  Rect goal_region;
  DatasetManifest manifest;

  std::size_t count() const { return trajectories.rows(); }
  std::size_t traj_dim() const { return horizon * action_dim; }
};

// Goal-reaching demonstrations. Each trajectory aims at a uniformly sampled
// goal with a squared-sine velocity profile that integrates to the goal
// exactly, then perturbs a 3-term cosine expansion of each action channel
// with Gaussian coefficients (sigma = noise_scale) and clamps entries to the
// action limit. With noise_scale = 0 the end states equal the goals.
TrajectoryDataset gen_demos(const Environment& env, std::size_t count,
                            double noise_scale, RngStream& rng);

}  // namespace genrl::trajenv
