#include "genrl/evalmetrics/knn_pr.hpp"

#include <algorithm>
#include <cmath>

#include "genrl/error.hpp"

namespace genrl::evalmetrics {
namespace {

// Squared radii, used internally so membership checks stay exact.
std::vector<double> knn_sq_radii(const Matrix& t, std::size_t k) {
  const std::size_t n = t.rows();
  require(k >= 1, "knn_radii: k must be at least one");
  require(n > k, "knn_radii: need more than k rows");
  std::vector<double> radii(n);
  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    dists.clear();
    const double* ri = t.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* rj = t.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < t.cols(); ++c) {
        const double d = ri[c] - rj[c];
        acc += d * d;
      }
      dists.emplace_back(acc, j);
    }
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    radii[i] = dists[k - 1].first;
  }
  return radii;
}

// Fraction of query rows lying within the squared radius of some member.
double membership_fraction(const Matrix& queries, const Matrix& members,
                           const std::vector<double>& sq_radii) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const double* qr = queries.row(q);
    bool inside = false;
    for (std::size_t m = 0; m < members.rows() && !inside; ++m) {
      const double* mr = members.row(m);
      double acc = 0.0;
      for (std::size_t c = 0; c < queries.cols(); ++c) {
        const double d = qr[c] - mr[c];
        acc += d * d;
      }
      inside = acc <= sq_radii[m];
    }
    if (inside) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.rows());
}

}  // namespace

std::vector<double> knn_radii(const Matrix& t, std::size_t k) {
  auto radii = knn_sq_radii(t, k);
  for (auto& r : radii) r = std::sqrt(r);
  return radii;
}

PrResult precision_recall(const Matrix& real, const Matrix& gen, std::size_t k) {
  require(real.cols() == gen.cols(), "precision_recall: dimension mismatch");
  const auto real_radii = knn_sq_radii(real, k);
  const auto gen_radii = knn_sq_radii(gen, k);
  PrResult out;
  out.precision = membership_fraction(gen, real, real_radii);
  out.recall = membership_fraction(real, gen, gen_radii);
  return out;
}

}  // namespace genrl::evalmetrics
