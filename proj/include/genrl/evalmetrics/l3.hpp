#pragma once

#include "genrl/genmodels/generative_model.hpp"
#include "genrl/trajenv/environment.hpp"

namespace genrl::evalmetrics {

using genmodels::DecodeFn;
using genmodels::Prior;
using numkit::Matrix;
using numkit::RngStream;

struct L3Config {
  double epsilon = 0.2;        // neighborhood radius in latent space
  std::size_t centers = 50;    // prior draws to probe around
  std::size_t neighbors = 500;  // points per neighborhood, uniform in the ball
  std::size_t train_count = 350;
  std::size_t test_count = 150;  // train + test must equal neighbors
};

struct L3Result {
  double mean_mse = 0.0;           // averaged over centers, per end-state scalar
  std::vector<double> per_center;  // held-out fit error of each neighborhood
  std::size_t ridge_fallbacks = 0;  // affine fits that needed regularization
};

// Local linearity of the latent-to-end-state composite: fit an affine map
// on part of each neighborhood's (latent, end state) pairs and score the
// held-out mean squared error. Near-zero means the composite is locally
// affine at that scale.
L3Result l3(const DecodeFn& decode, const Prior& prior, const trajenv::Environment& env,
            const L3Config& config, RngStream& rng);

}  // namespace genrl::evalmetrics
