#include "genrl/empolicy/gaussian_policy.hpp"

#include <cmath>

#include "genrl/error.hpp"
#include "genrl/numkit/clamp.hpp"

namespace genrl::empolicy {
namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;
constexpr std::size_t kHiddenWidth = 32;

}  // namespace

void GaussianPolicy::validate() const {
  require(latent_dim > 0, "GaussianPolicy: latent_dim must be positive");
  require(net.in_dim() == 2, "GaussianPolicy: net must read a planar goal state");
  require(net.out_dim() == 2 * latent_dim,
          "GaussianPolicy: net must emit [mu | log sigma]");
}

GaussianPolicy make_policy(std::size_t latent_dim, RngStream& rng) {
  GaussianPolicy policy;
  policy.latent_dim = latent_dim;
  policy.net = Mlp::init_random(
      {2, kHiddenWidth, kHiddenWidth, 2 * latent_dim},
      {numkit::Activation::Tanh, numkit::Activation::Tanh, numkit::Activation::Identity},
      {false, false, false}, rng);
  auto& head_bias = policy.net.layers().back().bias;
  for (std::size_t j = latent_dim; j < 2 * latent_dim; ++j)
    head_bias[j] = kLogSigmaBiasInit;
  return policy;
}

Mlp make_value_net(RngStream& rng) {
  return Mlp::init_random(
      {2, kHiddenWidth, kHiddenWidth, 1},
      {numkit::Activation::Tanh, numkit::Activation::Tanh, numkit::Activation::Identity},
      {false, false, false}, rng);
}

PolicyHeads policy_heads(const GaussianPolicy& policy, const Matrix& states,
                         numkit::ForwardCache* cache) {
  policy.validate();
  require(states.cols() == 2, "policy_heads: states must be n x 2");
  const Matrix out = cache ? policy.net.forward(states, numkit::Mode::Eval, *cache)
                           : policy.net.forward(states, numkit::Mode::Eval);
  const std::size_t n = states.rows();
  const std::size_t latent = policy.latent_dim;
  PolicyHeads heads{Matrix(n, latent), Matrix(n, latent), Matrix(n, latent)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < latent; ++j) {
      heads.mu(i, j) = out(i, j);
      const double raw = out(i, latent + j);
      heads.log_sigma(i, j) = numkit::clamp_value(raw, kLogSigmaMin, kLogSigmaMax);
      heads.sigma_mask(i, j) = numkit::clamp_mask(raw, kLogSigmaMin, kLogSigmaMax);
    }
  }
  return heads;
}

Matrix policy_sample(const GaussianPolicy& policy, const Matrix& states, RngStream& rng,
                     std::vector<double>* log_densities) {
  const PolicyHeads heads = policy_heads(policy, states);
  const std::size_t n = states.rows();
  const std::size_t latent = policy.latent_dim;
  Matrix alphas(n, latent);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream row = rng.split(i);
    for (std::size_t j = 0; j < latent; ++j)
      alphas(i, j) = heads.mu(i, j) + std::exp(heads.log_sigma(i, j)) * row.gaussian();
  }
  if (log_densities) *log_densities = policy_log_density(policy, states, alphas);
  return alphas;
}

std::vector<double> policy_log_density(const GaussianPolicy& policy, const Matrix& states,
                                       const Matrix& latents) {
  const PolicyHeads heads = policy_heads(policy, states);
  require(latents.rows() == states.rows() && latents.cols() == policy.latent_dim,
          "policy_log_density: latents must be n x latent_dim");
  std::vector<double> out(states.rows());
  for (std::size_t i = 0; i < states.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < policy.latent_dim; ++j) {
      const double ls = heads.log_sigma(i, j);
      const double d = (latents(i, j) - heads.mu(i, j)) / std::exp(ls);
      acc += -kHalfLog2Pi - ls - 0.5 * d * d;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<double> policy_kl(const GaussianPolicy& q, const GaussianPolicy& pi,
                              const Matrix& states) {
  require(q.latent_dim == pi.latent_dim, "policy_kl: latent dims differ");
  const PolicyHeads hq = policy_heads(q, states);
  const PolicyHeads hp = policy_heads(pi, states);
  std::vector<double> out(states.rows());
  for (std::size_t i = 0; i < states.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < q.latent_dim; ++j) {
      const double lsq = hq.log_sigma(i, j);
      const double lsp = hp.log_sigma(i, j);
      const double vq = std::exp(2.0 * lsq);
      const double vp = std::exp(2.0 * lsp);
      const double dm = hq.mu(i, j) - hp.mu(i, j);
      acc += lsp - lsq + (vq + dm * dm) / (2.0 * vp) - 0.5;
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace genrl::empolicy
