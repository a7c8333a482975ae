#include "genrl/evalmetrics/dwpr.hpp"

#include <algorithm>

#include "genrl/error.hpp"
#include "genrl/evalmetrics/dipr.hpp"
#include "genrl/evalmetrics/knn_pr.hpp"

namespace genrl::evalmetrics {

DwprResult dwpr(const DecodeFn& decode, const Prior& prior, const DwprConfig& config,
                RngStream& rng) {
  const std::size_t latent = prior.dim;
  const std::size_t n = config.samples;
  const std::size_t D = config.interventions;
  require(latent >= 2, "dwpr: need at least two latent dimensions");
  require(n * D > config.k, "dwpr: set size must exceed k");

  const double a = config.grid_half_width.value_or(prior.intervention_half_width());
  const auto grid = intervention_grid(a, D);

  // Reference set: one fixed prior push-forward per model evaluation.
  RngStream ref_stream = rng.split(0);
  const Matrix reference = decode(prior.sample(n * D, ref_stream));

  bool degenerate = true;
  for (std::size_t i = 1; i < reference.rows() && degenerate; ++i)
    for (std::size_t c = 0; c < reference.cols(); ++c)
      if (reference(i, c) != reference(0, c)) {
        degenerate = false;
        break;
      }

  DwprResult out;
  out.degenerate = degenerate;
  out.delta.assign(latent, 0.0);
  for (std::size_t l = 0; l < latent; ++l) {
    Matrix intervened(n * D, reference.cols());
    for (std::size_t d = 0; d < D; ++d) {
      RngStream stream = rng.split(1 + l * D + d);
      Matrix latents = prior.sample(n, stream);
      for (std::size_t i = 0; i < n; ++i) latents(i, l) = grid[d];
      const Matrix part = decode(latents);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < part.cols(); ++c)
          intervened(d * n + i, c) = part(i, c);
    }
    const PrResult pr = precision_recall(reference, intervened, config.k);
    out.delta[l] = pr.precision - pr.recall;
  }

  std::vector<double> sorted = out.delta;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  out.delta1 = sorted[0];
  out.delta2 = sorted[1];
  out.delta_avg = 0.5 * (out.delta1 + out.delta2);
  return out;
}

}  // namespace genrl::evalmetrics
