#pragma once

#include <cstddef>
#include <vector>

namespace genrl::numkit {

// One optimizer state per flat parameter vector. step counts applied updates.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<double> m;  // first-moment estimate
  std::vector<double> v;  // second-moment estimate

  explicit AdamState(std::size_t dim = 0, double lr = 1e-3)
      : learning_rate(lr), m(dim, 0.0), v(dim, 0.0) {}
};

// In-place bias-corrected update:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads);

}  // namespace genrl::numkit
