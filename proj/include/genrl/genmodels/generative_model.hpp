#pragma once

#include <functional>
#include <string>

#include "genrl/genmodels/prior.hpp"
#include "genrl/numkit/mlp.hpp"

namespace genrl::genmodels {

struct TrajShape {
  std::size_t horizon = 20;
  std::size_t action_dim = 2;
  std::size_t flat_dim() const { return horizon * action_dim; }
};

// Decoder plus its prior: the trained object every metric and the policy
// loop consume. decode() runs the net in Eval mode (frozen normalization
// statistics), so it is deterministic given the latents.
struct GenerativeModel {
  numkit::Mlp decoder;  // latent -> flattened trajectory
  Prior prior;
  TrajShape shape;

  Matrix decode(const Matrix& latents) const;

  // Prior sample pushed through the decoder.
  Matrix sample(std::size_t n, RngStream& rng) const;

  void validate() const;  // decoder dims must match prior.dim and shape
};

// Metric-facing decode hook. Callables may be stateful (a stochastic
// stand-in holding its own stream), but given identical call sequences they
// must reproduce identical outputs.
using DecodeFn = std::function<Matrix(const Matrix& latents)>;

inline DecodeFn decode_fn(const GenerativeModel& model) {
  return [&model](const Matrix& latents) { return model.decode(latents); };
}

}  // namespace genrl::genmodels
