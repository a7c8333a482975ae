#include "genrl/evalmetrics/l3.hpp"

#include <cmath>

#include "genrl/error.hpp"
#include "genrl/numkit/linalg.hpp"

namespace genrl::evalmetrics {

L3Result l3(const DecodeFn& decode, const Prior& prior, const trajenv::Environment& env,
            const L3Config& config, RngStream& rng) {
  require(config.train_count + config.test_count == config.neighbors,
          "l3: train and test counts must partition the neighborhood");
  require(config.centers >= 1, "l3: need at least one center");
  require(config.train_count > prior.dim, "l3: not enough points for an affine fit");
  const std::size_t latent = prior.dim;

  L3Result out;
  out.per_center.reserve(config.centers);
  for (std::size_t c = 0; c < config.centers; ++c) {
    RngStream stream = rng.split(c);
    const Matrix center = prior.sample(1, stream);

    // Uniform draws in the epsilon-ball: Gaussian direction, radius by
    // the inverse-cdf of the ball volume.
    Matrix points(config.neighbors, latent);
    for (std::size_t i = 0; i < config.neighbors; ++i) {
      std::vector<double> dir(latent);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (std::size_t j = 0; j < latent; ++j) {
          dir[j] = stream.gaussian();
          norm += dir[j] * dir[j];
        }
        norm = std::sqrt(norm);
      } while (norm == 0.0);
      const double radius =
          config.epsilon * std::pow(stream.uniform(), 1.0 / static_cast<double>(latent));
      for (std::size_t j = 0; j < latent; ++j)
        points(i, j) = center(0, j) + radius * dir[j] / norm;
    }

    const Matrix ends = trajenv::exe_batch(env, decode(points));

    // Affine design [1 | latent] fit on the first train_count rows.
    Matrix design(config.train_count, latent + 1);
    Matrix targets(config.train_count, ends.cols());
    for (std::size_t i = 0; i < config.train_count; ++i) {
      design(i, 0) = 1.0;
      for (std::size_t j = 0; j < latent; ++j) design(i, j + 1) = points(i, j);
      for (std::size_t j = 0; j < ends.cols(); ++j) targets(i, j) = ends(i, j);
    }
    const auto fit = numkit::lstsq(design, targets, /*allow_ridge=*/true);
    if (fit.used_ridge) ++out.ridge_fallbacks;

    double mse = 0.0;
    for (std::size_t i = config.train_count; i < config.neighbors; ++i) {
      for (std::size_t j = 0; j < ends.cols(); ++j) {
        double pred = fit.coef(0, j);
        for (std::size_t q = 0; q < latent; ++q) pred += fit.coef(q + 1, j) * points(i, q);
        const double d = pred - ends(i, j);
        mse += d * d;
      }
    }
    mse /= static_cast<double>(config.test_count * ends.cols());
    out.per_center.push_back(mse);
    out.mean_mse += mse;
  }
  out.mean_mse /= static_cast<double>(config.centers);
  return out;
}

}  // namespace genrl::evalmetrics
