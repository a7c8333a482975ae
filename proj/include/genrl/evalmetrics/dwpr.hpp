#pragma once

#include <optional>

#include "genrl/genmodels/generative_model.hpp"

namespace genrl::evalmetrics {

using genmodels::DecodeFn;
using genmodels::Prior;
using numkit::Matrix;
using numkit::RngStream;

struct DwprConfig {
  std::size_t interventions = 5;  // grid points per latent dimension
  std::size_t samples = 400;      // rows per intervention value
  std::size_t k = 3;              // neighborhood size for precision/recall
  std::optional<double> grid_half_width;
};

struct DwprResult {
  std::vector<double> delta;  // per latent dim: precision minus recall
  double delta1 = 0.0;        // largest delta
  double delta2 = 0.0;        // second largest
  double delta_avg = 0.0;     // mean of the two
  bool degenerate = false;    // reference rows were all identical
};

// Trajectory-space disentanglement: for each latent dimension, the union
// of grid-intervened generations is compared against one fixed
// prior-generated reference set. Fixing a dimension the decoder uses
// collapses the generated set onto a slice, which keeps precision high and
// recall low; an unused dimension leaves both where they started.
DwprResult dwpr(const DecodeFn& decode, const Prior& prior, const DwprConfig& config,
                RngStream& rng);

}  // namespace genrl::evalmetrics
