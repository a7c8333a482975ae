#pragma once

#include <cstddef>
#include <vector>

#include "genrl/numkit/mlp.hpp"
#include "genrl/numkit/rng.hpp"

namespace genrl::empolicy {

using numkit::Matrix;
using numkit::Mlp;
using numkit::RngStream;

// Raw log-sigma outputs are clamped into this range; the head bias starts
// at kLogSigmaBiasInit so exploration opens moderate rather than wide.
inline constexpr double kLogSigmaMin = -4.0;
inline constexpr double kLogSigmaMax = 1.0;
inline constexpr double kLogSigmaBiasInit = -0.5;

// Diagonal-Gaussian policy over decoder latents: the net maps a goal state
// to the concatenation [mu | raw log sigma].
struct GaussianPolicy {
  Mlp net;
  std::size_t latent_dim = 0;

  void validate() const;
};

// Goal state -> two tanh layers of 32 -> linear [mu | log sigma] head.
GaussianPolicy make_policy(std::size_t latent_dim, RngStream& rng);

// Goal state -> two tanh layers of 32 -> scalar return estimate.
Mlp make_value_net(RngStream& rng);

struct PolicyHeads {
  Matrix mu;          // n x latent
  Matrix log_sigma;   // after the clamp
  Matrix sigma_mask;  // 1 where raw log sigma sat strictly inside the bounds
};

// Optional cache captures the net forward for a later backward pass.
PolicyHeads policy_heads(const GaussianPolicy& policy, const Matrix& states,
                         numkit::ForwardCache* cache = nullptr);

// alpha_i = mu_i + sigma_i * z_i with z_i drawn from rng.split(i), so rows
// can be reproduced independently of each other.
Matrix policy_sample(const GaussianPolicy& policy, const Matrix& states, RngStream& rng,
                     std::vector<double>* log_densities = nullptr);

// Exact diagonal-Gaussian log-density of each latent row at its state.
std::vector<double> policy_log_density(const GaussianPolicy& policy, const Matrix& states,
                                       const Matrix& latents);

// Closed-form KL(q(.|s) || pi(.|s)) per state row.
std::vector<double> policy_kl(const GaussianPolicy& q, const GaussianPolicy& pi,
                              const Matrix& states);

}  // namespace genrl::empolicy
