#pragma once

#include <optional>

#include "genrl/evalmetrics/mmd.hpp"
#include "genrl/genmodels/generative_model.hpp"
#include "genrl/trajenv/environment.hpp"

namespace genrl::evalmetrics {

using genmodels::DecodeFn;
using genmodels::Prior;

// How many latent dimensions enter the final score: the smaller of the
// latent and end-state dimensionalities, or a fixed three.
enum class TopPairMode { MinDims, FixedThree };

struct DiprConfig {
  std::size_t interventions = 5;  // grid points per latent dimension
  std::size_t samples = 200;      // rows per generated / reference set
  MmdConfig mmd;                  // gamma, permutations, eta, repeats
  TopPairMode top_mode = TopPairMode::MinDims;
  std::optional<double> grid_half_width;  // defaults to the prior's convention
};

// Equidistant intervention grid on [-a, a].
std::vector<double> intervention_grid(double half_width, std::size_t count);

struct DiprResult {
  double dip = 0.0;  // summed strength of the selected latent dimensions
  double dir = 0.0;  // fraction of end-state components covered by them
  std::vector<int> linked_component;  // per latent dim; -1 when nothing significant
  std::vector<double> dim_score;      // mean significant MMD of the linked component
  Matrix cell_scores;                 // latent x component mean significant MMD
};

// Probes each latent dimension with grid interventions, tests the shift of
// every end-state component against resampled dataset end states, links
// each dimension to its strongest significantly-shifted component, and
// aggregates the strongest dimensions. Streams split per
// (dimension, intervention, repeat), so any evaluation order gives
// identical results.
DiprResult dipr(const DecodeFn& decode, const Prior& prior, const trajenv::Environment& env,
                const Matrix& dataset_end_states, const DiprConfig& config, RngStream& rng);

}  // namespace genrl::evalmetrics
