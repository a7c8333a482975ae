#pragma once

#include "genrl/numkit/matrix.hpp"

namespace genrl::numkit {

struct LstsqResult {
  Matrix coef;           // d x t solution minimizing |design * coef - targets|^2
  bool used_ridge = false;
};

// Minimum-norm-ish least squares via Householder QR. When the design is
// rank deficient (or has fewer rows than columns) and allow_ridge is set,
// falls back to solving (A^T A + lambda I) X = A^T B; otherwise throws
// SingularMatrixError.
LstsqResult lstsq(const Matrix& design, const Matrix& targets,
                  bool allow_ridge = true, double ridge_lambda = 1e-8);

}  // namespace genrl::numkit
