#include "genrl/numkit/linalg.hpp"

#include <cmath>
#include <vector>

#include "genrl/error.hpp"

namespace genrl::numkit {
namespace {

// Solves (A^T A + lambda I) X = A^T B by Cholesky. lambda > 0 keeps the
// system positive definite regardless of A's rank.
Matrix ridge_solve(const Matrix& a, const Matrix& b, double lambda) {
  const std::size_t d = a.cols();
  Matrix ata(d, d, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.row(i);
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) ata(p, q) += row[p] * row[q];
  }
  for (std::size_t p = 0; p < d; ++p) ata(p, p) += lambda;

  Matrix atb = matmul(transpose(a), b);

  // In-place Cholesky: ata = L L^T.
  Matrix l(d, d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = ata(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw SingularMatrixError("ridge_solve: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }

  // Forward then back substitution for each target column.
  Matrix x(d, b.cols(), 0.0);
  std::vector<double> y(d);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = atb(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (std::size_t ii = d; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double s = y[i];
      for (std::size_t k = i + 1; k < d; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

}  // namespace

LstsqResult lstsq(const Matrix& design, const Matrix& targets,
                  bool allow_ridge, double ridge_lambda) {
  require(design.rows() == targets.rows(), "lstsq: row counts differ");
  require(design.rows() > 0 && design.cols() > 0, "lstsq: empty system");
  const std::size_t n = design.rows();
  const std::size_t d = design.cols();
  const std::size_t t = targets.cols();

  if (n < d) {
    if (allow_ridge) return {ridge_solve(design, targets, ridge_lambda), true};
    throw SingularMatrixError("lstsq: fewer rows than columns");
  }

  // Householder QR applied jointly to the design and the targets.
  Matrix r = design;
  Matrix qtb = targets;
  for (std::size_t k = 0; k < d; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;  // column already zero below the diagonal
    const double alpha = (r(k, k) > 0.0) ? -norm : norm;
    std::vector<double> v(n - k);
    v[0] = r(k, k) - alpha;
    for (std::size_t i = k + 1; i < n; ++i) v[i - k] = r(i, k);
    double vtv = 0.0;
    for (double vi : v) vtv += vi * vi;
    if (vtv == 0.0) continue;
    const double beta = 2.0 / vtv;
    auto reflect = [&](Matrix& m, std::size_t col_begin) {
      for (std::size_t j = col_begin; j < m.cols(); ++j) {
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += v[i - k] * m(i, j);
        dot *= beta;
        for (std::size_t i = k; i < n; ++i) m(i, j) -= dot * v[i - k];
      }
    };
    reflect(r, k);
    reflect(qtb, 0);
    r(k, k) = alpha;
    for (std::size_t i = k + 1; i < n; ++i) r(i, k) = 0.0;
  }

  double max_diag = 0.0;
  for (std::size_t k = 0; k < d; ++k) max_diag = std::max(max_diag, std::abs(r(k, k)));
  const double tol = 1e-12 * std::max(max_diag, 1e-300);
  for (std::size_t k = 0; k < d; ++k) {
    if (std::abs(r(k, k)) <= tol) {
      if (allow_ridge) return {ridge_solve(design, targets, ridge_lambda), true};
      throw SingularMatrixError("lstsq: rank-deficient design");
    }
  }

  Matrix x(d, t, 0.0);
  for (std::size_t c = 0; c < t; ++c) {
    for (std::size_t ii = d; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double s = qtb(i, c);
      for (std::size_t k = i + 1; k < d; ++k) s -= r(i, k) * x(k, c);
      x(i, c) = s / r(i, i);
    }
  }
  return {x, false};
}

}  // namespace genrl::numkit
