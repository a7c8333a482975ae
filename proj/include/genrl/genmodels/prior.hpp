#pragma once

#include <cstddef>
#include <string>

#include "genrl/numkit/matrix.hpp"
#include "genrl/numkit/rng.hpp"

namespace genrl::genmodels {

using numkit::Matrix;
using numkit::RngStream;

// Latent prior. StdNormal is the VAE default, Uniform(-1,1) the GAN default.
enum class PriorKind { StdNormal, Uniform };

struct Prior {
  PriorKind kind = PriorKind::StdNormal;
  std::size_t dim = 2;

  Matrix sample(std::size_t n, RngStream& rng) const;

  // Half-width of the equidistant intervention grid used by the
  // disentanglement metrics: 1.5 for StdNormal, 1.0 for Uniform.
  double intervention_half_width() const {
    return kind == PriorKind::StdNormal ? 1.5 : 1.0;
  }

  // Uniform support is [-1, 1]; StdNormal is unbounded.
  bool bounded() const { return kind == PriorKind::Uniform; }
};

std::string prior_kind_name(PriorKind kind);
PriorKind prior_kind_from_name(const std::string& name);

}  // namespace genrl::genmodels
