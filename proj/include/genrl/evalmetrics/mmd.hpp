#pragma once

#include <cstddef>
#include <vector>

#include "genrl/numkit/matrix.hpp"
#include "genrl/numkit/rng.hpp"

namespace genrl::evalmetrics {

using numkit::Matrix;
using numkit::RngStream;

struct MmdConfig {
  double gamma = 15.0;           // Gaussian kernel exp(-gamma |x-y|^2)
  std::size_t permutations = 100;  // pooled resplits per test
  double eta = 0.001;            // significance level
  std::size_t repeats = 10;      // reference resamples in the intervention driver
};

// Unbiased squared MMD between two samples (rows). Both within-set terms
// exclude the diagonal, so the estimate can be negative. Needs at least
// two rows per side.
double mmd2_unbiased(const Matrix& sr, const Matrix& sg, double gamma);

// Gaussian kernel matrix of pooled rows, k(i,j) = exp(-gamma |x_i - x_j|^2).
Matrix gaussian_kernel(const Matrix& pooled, double gamma);

// Unbiased squared MMD read off a precomputed pooled kernel matrix.
double mmd2_from_kernel(const Matrix& kernel, const std::vector<std::size_t>& idx_r,
                        const std::vector<std::size_t>& idx_g);

// Empirical (1 - eta) quantile: the ceil((1-eta) * count)-th smallest value.
double upper_quantile(std::vector<double> values, double eta);

struct PermutationTest {
  double observed = 0.0;
  double critical = 0.0;   // (1 - eta) quantile of the resplit values
  bool significant = false;  // observed strictly above critical
};

// Pools both samples, recomputes the statistic over random equal resplits,
// and compares the observed value against the resplit quantile.
PermutationTest mmd_permutation_test(const Matrix& sr, const Matrix& sg,
                                     const MmdConfig& config, RngStream& rng);

}  // namespace genrl::evalmetrics
