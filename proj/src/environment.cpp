#include "genrl/trajenv/environment.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::trajenv {

Environment make_linear_env() { return Environment{}; }

Environment make_two_link_arm_env() {
  Environment env;
  env.kind = ExeKind::TwoLinkArm;
  env.link1 = 0.75;
  env.link2 = 0.75;
  env.action_limit = 3.5;  // joint velocities; IK angles reach ~2.1 rad
  return env;
}

std::string exe_kind_name(ExeKind kind) {
  return kind == ExeKind::LinearIntegrator ? "linear" : "two_link_arm";
}

ExeKind exe_kind_from_name(const std::string& name) {
  if (name == "linear") return ExeKind::LinearIntegrator;
  if (name == "two_link_arm") return ExeKind::TwoLinkArm;
  throw ContractError("unknown environment kind: " + name);
}

std::vector<double> exe(const Environment& env, const double* flat_traj) {
  require(env.action_dim == 2, "exe: planar environments need 2 action components");
  const std::size_t T = env.horizon;
  if (env.kind == ExeKind::LinearIntegrator) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      sx += flat_traj[2 * t];
      sy += flat_traj[2 * t + 1];
    }
    return {env.dt * sx, env.dt * sy};
  }
  double q1 = 0.0, q2 = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    q1 += env.dt * flat_traj[2 * t];
    q2 += env.dt * flat_traj[2 * t + 1];
  }
  const double x = env.link1 * std::cos(q1) + env.link2 * std::cos(q1 + q2);
  const double y = env.link1 * std::sin(q1) + env.link2 * std::sin(q1 + q2);
  return {x, y};
}

Matrix exe_batch(const Environment& env, const Matrix& flat_trajs) {
  require(flat_trajs.cols() == env.traj_dim(), "exe_batch: trajectory width mismatch");
  Matrix out(flat_trajs.rows(), 2);
  for (std::size_t i = 0; i < flat_trajs.rows(); ++i) {
    const auto s = exe(env, flat_trajs.row(i));
    out(i, 0) = s[0];
    out(i, 1) = s[1];
  }
  return out;
}

double terminal_reward(const Environment& env, const double* goal, const double* flat_traj) {
  const auto s = exe(env, flat_traj);
  const double dx = s[0] - goal[0];
  const double dy = s[1] - goal[1];
  return -std::sqrt(dx * dx + dy * dy);
}

std::vector<double> sample_goal(const Environment& env, RngStream& rng) {
  return {rng.uniform(env.goal_region.xmin, env.goal_region.xmax),
          rng.uniform(env.goal_region.ymin, env.goal_region.ymax)};
}

std::vector<double> two_link_ik(const Environment& env, double x, double y) {
  const double l1 = env.link1, l2 = env.link2;
  const double r2 = x * x + y * y;
  double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  require(c2 >= -1.0 - 1e-9 && c2 <= 1.0 + 1e-9, "two_link_ik: target out of reach");
  c2 = std::min(1.0, std::max(-1.0, c2));
  const double q2 = -std::acos(c2);  // elbow-down branch
  const double q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return {q1, q2};
}

}  // namespace genrl::trajenv
