#pragma once

namespace genrl::numkit {

inline double clamp_value(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// Subgradient mask of the clamp: zero where the bound is active.
inline double clamp_mask(double x, double lo, double hi) {
  return (x > lo && x < hi) ? 1.0 : 0.0;
}

}  // namespace genrl::numkit
