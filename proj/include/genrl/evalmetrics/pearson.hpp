#pragma once

#include <cstddef>
#include <vector>

#include "genrl/numkit/rng.hpp"

namespace genrl::evalmetrics {

using numkit::RngStream;

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-sided permutation p-value, add-one corrected
};

// Sample correlation with a shuffle test on ys. Throws ContractError when
// either input has zero variance (the correlation is undefined there).
PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                      std::size_t permutations, RngStream& rng);

}  // namespace genrl::evalmetrics
