#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "genrl/empolicy/gaussian_policy.hpp"
#include "genrl/genmodels/generative_model.hpp"
#include "genrl/trajenv/environment.hpp"

namespace genrl::empolicy {

using genmodels::GenerativeModel;

struct EmConfig {
  std::size_t batch_size = 256;       // rollouts per outer iteration
  std::size_t outer_iterations = 100;
  std::size_t inner_epochs = 5;       // E-step / value-fit passes per iteration
  double kl_weight = 1.0;             // trust-region penalty on KL(q || pi)
  double policy_lr = 3e-3;
  double value_lr = 1e-2;
  bool normalize_advantages = true;   // zero mean, unit variance per batch
  std::uint64_t seed = 0;
};

// Inner optimizers walk shuffled minibatches of this size.
inline constexpr std::size_t kInnerMinibatch = 64;
// Importance log-ratios are clamped here before exponentiation.
inline constexpr double kLogRatioClamp = 20.0;

struct RolloutBatch {
  Matrix states;        // n x 2 goals drawn from the task distribution
  Matrix latents;       // n x latent, sampled from pi (never from q)
  Matrix trajectories;  // n x flat_dim, decoded from the in-support latents
  std::vector<double> rewards;
  std::vector<double> advantages;  // rewards minus the fitted value
};

struct EstepSurrogate {
  double value = 0.0;
  std::vector<double> grad;  // ascent gradient wrt q's flat parameters
  double mean_kl = 0.0;
  std::size_t ratio_clamps = 0;  // samples whose log-ratio hit the clamp
};

// mean_i [ exp(log q - log pi) * A_i - kl_weight * KL(q || pi)(s_i) ] with
// pi held fixed; clamped ratios contribute zero gradient through the
// ratio term but keep their KL pull.
EstepSurrogate estep_surrogate(const GaussianPolicy& q, const GaussianPolicy& pi,
                               const RolloutBatch& batch, double kl_weight);

struct InnerFitResult {
  double initial = 0.0;      // full-batch objective before any update
  double final_value = 0.0;  // full-batch objective of the returned params
  bool reverted = false;     // an earlier epoch beat the last one
};

// Adam ascent on the surrogate; epoch-end candidates compete on the full
// batch and the best one is kept, so the result never scores below the
// starting point.
InnerFitResult estep_update(GaussianPolicy& q, const GaussianPolicy& pi,
                            const RolloutBatch& batch, const EmConfig& config,
                            RngStream& rng);

// Exact parameter copy, the KL(q || pi) = 0 minimizer for twin nets.
void mstep_copy(const GaussianPolicy& q, GaussianPolicy& pi);

// Adam descent on mean squared error against the rewards, with the same
// best-epoch-wins contract as the E-step.
InnerFitResult value_fit(Mlp& value, const Matrix& states, const std::vector<double>& rewards,
                         const EmConfig& config, RngStream& rng);

struct EmCurveRow {
  std::size_t iteration = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_kl = 0.0;         // KL(q || pi) after the E-step, before the copy
  double clamp_fraction = 0.0;  // latent entries pulled back into the prior box
};

struct EmResult {
  GaussianPolicy policy;
  Mlp value;
  std::vector<EmCurveRow> curve;
  std::size_t estep_reverts = 0;
  std::size_t value_reverts = 0;
  // Set when a non-finite reward or parameter aborted the loop; the policy
  // is the last iteration-end state.
  std::optional<std::size_t> failed_iteration;
};

// One outer iteration: draw goals, sample latents from pi, decode, score
// terminal rewards, refit the value, run the E-step against the fresh
// advantages, then copy q over pi. Streams split per (iteration, sample),
// so rollout order cannot change results.
EmResult train_em(const GenerativeModel& model, const trajenv::Environment& env,
                  const EmConfig& config, RngStream& rng);

}  // namespace genrl::empolicy
