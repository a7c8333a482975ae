#include "genrl/trajenv/dataset.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::trajenv {

TrajectoryDataset gen_demos(const Environment& env, std::size_t count,
                            double noise_scale, RngStream& rng) {
  require(count >= 1, "gen_demos: count must be positive");
  require(env.action_dim == 2, "gen_demos: planar environments only");
  const std::size_t T = env.horizon;
  const std::size_t M = env.action_dim;
  constexpr std::size_t kNoiseTerms = 3;

  // Bell profile integrating to one: dt * sum_t w_t = dt * T / 2.
  std::vector<double> w(T);
  double wsum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double s = std::sin(M_PI * (static_cast<double>(t) + 0.5) / static_cast<double>(T));
    w[t] = s * s;
    wsum += w[t];
  }
  const double denom = env.dt * wsum;

  TrajectoryDataset ds;
  ds.horizon = T;
  ds.action_dim = M;
  ds.goal_region = env.goal_region;
  ds.trajectories = Matrix(count, T * M);
  ds.end_states = Matrix(count, 2);
  ds.manifest.seed = rng.seed();
  ds.manifest.noise_scale = noise_scale;
  ds.manifest.count = count;
  ds.manifest.env_kind = exe_kind_name(env.kind);

  for (std::size_t i = 0; i < count; ++i) {
    RngStream ri = rng.split(i);
    const auto goal = sample_goal(env, ri);

    // Target channel values: workspace goal for the integrator, joint
    // angles for the arm (the profile then integrates to those angles).
    std::vector<double> channel_target = goal;
    if (env.kind == ExeKind::TwoLinkArm)
      channel_target = two_link_ik(env, goal[0], goal[1]);

    double* traj = ds.trajectories.row(i);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t m = 0; m < M; ++m)
        traj[t * M + m] = channel_target[m] * w[t] / denom;

    if (noise_scale > 0.0) {
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < kNoiseTerms; ++k) {
          const double coef = noise_scale * ri.gaussian();
          for (std::size_t t = 0; t < T; ++t)
            traj[t * M + m] += coef * std::cos(M_PI * static_cast<double>(k) *
                                               (static_cast<double>(t) + 0.5) /
                                               static_cast<double>(T));
        }
      }
      for (std::size_t j = 0; j < T * M; ++j)
        traj[j] = std::min(env.action_limit, std::max(-env.action_limit, traj[j]));
    }

    const auto end = exe(env, traj);
    ds.end_states(i, 0) = end[0];
    ds.end_states(i, 1) = end[1];
  }
  require(ds.trajectories.all_finite(), "gen_demos: non-finite trajectory");
  return ds;
}

}  // namespace genrl::trajenv
