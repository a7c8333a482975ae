#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genrl/numkit/matrix.hpp"
#include "genrl/numkit/rng.hpp"

namespace genrl::trajenv {

using numkit::Matrix;
using numkit::RngStream;

// Planar end-state maps. Both produce a 2-D end state from a sequence of
// 2-D velocity commands integrated with a fixed step.
enum class ExeKind { LinearIntegrator, TwoLinkArm };

struct Rect {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
};

struct Environment {
  ExeKind kind = ExeKind::LinearIntegrator;
  double dt = 0.1;             // seconds per step
  std::size_t horizon = 20;    // steps per trajectory
  std::size_t action_dim = 2;  // velocity components per step
  double link1 = 0.75;         // arm segment lengths (TwoLinkArm only)
  double link2 = 0.75;
  double action_limit = 1.5;   // |action entry| bound enforced by the demo generator
  Rect goal_region{0.65, 1.3, -0.4, 0.4};

  std::size_t traj_dim() const { return horizon * action_dim; }
};

Environment make_linear_env();
Environment make_two_link_arm_env();

std::string exe_kind_name(ExeKind kind);
ExeKind exe_kind_from_name(const std::string& name);

// End state of one flattened trajectory (row-major step-by-step layout,
// entry index = t * action_dim + m).
//   LinearIntegrator: s = dt * sum_t u_t
//   TwoLinkArm: integrate joint angles from zero, then forward kinematics.
std::vector<double> exe(const Environment& env, const double* flat_traj);

// End states for every row of a batch, n x traj_dim -> n x 2.
Matrix exe_batch(const Environment& env, const Matrix& flat_trajs);

// Negative Euclidean distance between the end state and the goal.
double terminal_reward(const Environment& env, const double* goal, const double* flat_traj);

// Uniform draw from the goal region.
std::vector<double> sample_goal(const Environment& env, RngStream& rng);

// Elbow-down inverse kinematics for the arm; throws if out of reach.
std::vector<double> two_link_ik(const Environment& env, double x, double y);

}  // namespace genrl::trajenv
