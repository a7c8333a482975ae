#include "genrl/evalmetrics/pearson.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::evalmetrics {
namespace {

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw ContractError("pearson: zero-variance input, correlation undefined");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                      std::size_t permutations, RngStream& rng) {
  require(xs.size() == ys.size(), "pearson: length mismatch");
  require(xs.size() >= 3, "pearson: need at least 3 points");

  PearsonResult out;
  out.r = correlation(xs, ys);

  const double observed = std::abs(out.r);
  std::size_t exceed = 0;
  std::vector<double> shuffled(ys.size());
  for (std::size_t p = 0; p < permutations; ++p) {
    const std::vector<std::size_t> perm = rng.permutation(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) shuffled[i] = ys[perm[i]];
    if (std::abs(correlation(xs, shuffled)) >= observed) ++exceed;
  }
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(permutations + 1);
  return out;
}

}  // namespace genrl::evalmetrics
