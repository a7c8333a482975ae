#include "genrl/evalmetrics/dipr.hpp"

#include <algorithm>
#include <cmath>

#include "genrl/error.hpp"

namespace genrl::evalmetrics {

std::vector<double> intervention_grid(double half_width, std::size_t count) {
  require(count >= 2, "intervention_grid: need at least two points");
  std::vector<double> grid(count);
  for (std::size_t d = 0; d < count; ++d)
    grid[d] = -half_width + 2.0 * half_width * static_cast<double>(d) /
                                static_cast<double>(count - 1);
  return grid;
}

DiprResult dipr(const DecodeFn& decode, const Prior& prior, const trajenv::Environment& env,
                const Matrix& dataset_end_states, const DiprConfig& config, RngStream& rng) {
  const std::size_t latent = prior.dim;
  const std::size_t comps = 2;  // planar end states
  const std::size_t n = config.samples;
  const std::size_t D = config.interventions;
  const std::size_t p = config.mmd.repeats;
  require(dataset_end_states.rows() >= n, "dipr: dataset smaller than the sample size");
  require(dataset_end_states.cols() == comps, "dipr: end states must be planar");
  require(n >= 2 && p >= 1, "dipr: need samples and repeats");

  const double a = config.grid_half_width.value_or(prior.intervention_half_width());
  const auto grid = intervention_grid(a, D);

  Matrix sum_sig(latent, comps, 0.0);
  Matrix count_sig(latent, comps, 0.0);

  for (std::size_t l = 0; l < latent; ++l) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t r = 0; r < p; ++r) {
        RngStream stream = rng.split((l * D + d) * p + r);

        Matrix latents = prior.sample(n, stream);
        for (std::size_t i = 0; i < n; ++i) latents(i, l) = grid[d];
        const Matrix trajs = decode(latents);
        const Matrix gen_ends = trajenv::exe_batch(env, trajs);

        // Fresh reference draw from the recorded end states.
        const auto order = stream.permutation(dataset_end_states.rows());
        std::vector<std::size_t> pick(order.begin(), order.begin() + n);
        const Matrix ref_ends = numkit::take_rows(dataset_end_states, pick);

        // One pooled kernel per component; resplit indices are shared
        // across components so the whole (l, d, r) unit reads one stream.
        std::vector<Matrix> kernels(comps);
        for (std::size_t j = 0; j < comps; ++j) {
          Matrix pooled(2 * n, 1);
          for (std::size_t i = 0; i < n; ++i) {
            pooled(i, 0) = gen_ends(i, j);
            pooled(n + i, 0) = ref_ends(i, j);
          }
          kernels[j] = gaussian_kernel(pooled, config.mmd.gamma);
        }

        std::vector<std::size_t> idx_g(n), idx_r(n);
        for (std::size_t i = 0; i < n; ++i) {
          idx_g[i] = i;
          idx_r[i] = n + i;
        }
        std::vector<double> observed(comps);
        for (std::size_t j = 0; j < comps; ++j)
          observed[j] = mmd2_from_kernel(kernels[j], idx_g, idx_r);

        std::vector<std::vector<double>> resplits(comps,
                                                  std::vector<double>(config.mmd.permutations));
        for (std::size_t perm = 0; perm < config.mmd.permutations; ++perm) {
          const auto shuffled = stream.permutation(2 * n);
          std::vector<std::size_t> pa(shuffled.begin(), shuffled.begin() + n);
          std::vector<std::size_t> pb(shuffled.begin() + n, shuffled.end());
          for (std::size_t j = 0; j < comps; ++j)
            resplits[j][perm] = mmd2_from_kernel(kernels[j], pa, pb);
        }
        for (std::size_t j = 0; j < comps; ++j) {
          const double critical = upper_quantile(resplits[j], config.mmd.eta);
          if (observed[j] > critical) {
            sum_sig(l, j) += observed[j];
            count_sig(l, j) += 1.0;
          }
        }
      }
    }
  }

  DiprResult out;
  out.cell_scores = Matrix(latent, comps, 0.0);
  out.linked_component.assign(latent, -1);
  out.dim_score.assign(latent, 0.0);
  for (std::size_t l = 0; l < latent; ++l) {
    for (std::size_t j = 0; j < comps; ++j)
      if (count_sig(l, j) > 0.0) out.cell_scores(l, j) = sum_sig(l, j) / count_sig(l, j);
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < comps; ++j) {
      if (count_sig(l, j) == 0.0) continue;
      if (best < 0 || out.cell_scores(l, j) > best_score) {
        best = static_cast<int>(j);
        best_score = out.cell_scores(l, j);
      }
    }
    out.linked_component[l] = best;
    out.dim_score[l] = best >= 0 ? std::max(0.0, best_score) : 0.0;
  }

  const std::size_t want = config.top_mode == TopPairMode::MinDims
                               ? std::min(latent, comps)
                               : std::min<std::size_t>(latent, 3);
  std::vector<std::size_t> dims(latent);
  for (std::size_t l = 0; l < latent; ++l) dims[l] = l;
  std::stable_sort(dims.begin(), dims.end(), [&](std::size_t x, std::size_t y) {
    return out.dim_score[x] > out.dim_score[y];
  });
  std::vector<bool> covered(comps, false);
  for (std::size_t i = 0; i < want && i < dims.size(); ++i) {
    const std::size_t l = dims[i];
    out.dip += out.dim_score[l];
    if (out.linked_component[l] >= 0) covered[out.linked_component[l]] = true;
  }
  std::size_t unique = 0;
  for (bool c : covered)
    if (c) ++unique;
  out.dir = static_cast<double>(unique) / static_cast<double>(comps);
  return out;
}

}  // namespace genrl::evalmetrics
