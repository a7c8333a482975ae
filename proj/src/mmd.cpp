#include "genrl/evalmetrics/mmd.hpp"

#include <algorithm>
#include <cmath>

#include "genrl/error.hpp"

namespace genrl::evalmetrics {

double mmd2_unbiased(const Matrix& sr, const Matrix& sg, double gamma) {
  const std::size_t m = sr.rows();
  const std::size_t n = sg.rows();
  require(m >= 2 && n >= 2, "mmd2_unbiased: need at least two rows per sample");
  require(sr.cols() == sg.cols(), "mmd2_unbiased: dimension mismatch");
  const std::size_t d = sr.cols();

  auto k = [&](const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = a[c] - b[c];
      acc += diff * diff;
    }
    return std::exp(-gamma * acc);
  };

  double within_r = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) within_r += k(sr.row(i), sr.row(j));
  double within_g = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) within_g += k(sg.row(i), sg.row(j));
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) cross += k(sr.row(i), sg.row(j));

  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  return 2.0 * within_r / (md * (md - 1.0)) + 2.0 * within_g / (nd * (nd - 1.0)) -
         2.0 * cross / (md * nd);
}

Matrix gaussian_kernel(const Matrix& pooled, double gamma) {
  const std::size_t n = pooled.rows();
  Matrix k(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < pooled.cols(); ++c) {
        const double diff = pooled(i, c) - pooled(j, c);
        acc += diff * diff;
      }
      const double v = std::exp(-gamma * acc);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double mmd2_from_kernel(const Matrix& kernel, const std::vector<std::size_t>& idx_r,
                        const std::vector<std::size_t>& idx_g) {
  const std::size_t m = idx_r.size();
  const std::size_t n = idx_g.size();
  require(m >= 2 && n >= 2, "mmd2_from_kernel: need at least two rows per side");
  double within_r = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) within_r += kernel(idx_r[i], idx_r[j]);
  double within_g = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) within_g += kernel(idx_g[i], idx_g[j]);
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = kernel.row(idx_r[i]);
    for (std::size_t j = 0; j < n; ++j) cross += row[idx_g[j]];
  }
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  return 2.0 * within_r / (md * (md - 1.0)) + 2.0 * within_g / (nd * (nd - 1.0)) -
         2.0 * cross / (md * nd);
}

double upper_quantile(std::vector<double> values, double eta) {
  require(!values.empty(), "upper_quantile: empty sample");
  require(eta > 0.0 && eta < 1.0, "upper_quantile: eta must lie in (0,1)");
  std::sort(values.begin(), values.end());
  const double pos = std::ceil((1.0 - eta) * static_cast<double>(values.size()));
  std::size_t k = static_cast<std::size_t>(pos);
  k = std::max<std::size_t>(1, std::min(values.size(), k));
  return values[k - 1];
}

PermutationTest mmd_permutation_test(const Matrix& sr, const Matrix& sg,
                                     const MmdConfig& config, RngStream& rng) {
  require(config.permutations >= 1, "mmd_permutation_test: need at least one resplit");
  const std::size_t m = sr.rows();
  const std::size_t n = sg.rows();
  const Matrix pooled = numkit::vstack(sr, sg);
  const Matrix kernel = gaussian_kernel(pooled, config.gamma);

  std::vector<std::size_t> idx_r(m), idx_g(n);
  for (std::size_t i = 0; i < m; ++i) idx_r[i] = i;
  for (std::size_t j = 0; j < n; ++j) idx_g[j] = m + j;

  PermutationTest out;
  out.observed = mmd2_from_kernel(kernel, idx_r, idx_g);

  std::vector<double> resplits(config.permutations);
  for (std::size_t p = 0; p < config.permutations; ++p) {
    const auto perm = rng.permutation(m + n);
    std::vector<std::size_t> pr(perm.begin(), perm.begin() + m);
    std::vector<std::size_t> pg(perm.begin() + m, perm.end());
    resplits[p] = mmd2_from_kernel(kernel, pr, pg);
  }
  out.critical = upper_quantile(std::move(resplits), config.eta);
  out.significant = out.observed > out.critical;
  return out;
}

}  // namespace genrl::evalmetrics
