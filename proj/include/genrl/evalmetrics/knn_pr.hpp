#pragma once

#include <cstddef>
#include <vector>

#include "genrl/numkit/matrix.hpp"

namespace genrl::evalmetrics {

using numkit::Matrix;

// Distance from each row to its k-th nearest other row (the row itself is
// excluded). Ties resolve by index order, so results are deterministic.
std::vector<double> knn_radii(const Matrix& t, std::size_t k);

struct PrResult {
  double precision = 0.0;  // fraction of generated rows inside the real manifold
  double recall = 0.0;     // fraction of real rows inside the generated manifold
};

// Hypersphere-membership precision/recall: a point belongs to a set's
// manifold when it lies within some member's k-th-neighbor radius.
PrResult precision_recall(const Matrix& real, const Matrix& gen, std::size_t k);

}  // namespace genrl::evalmetrics
