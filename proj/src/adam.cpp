#include "genrl/numkit/adam.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::numkit {

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads) {
  require(params.size() == grads.size(), "adam_step: size mismatch");
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          "adam_step: state not sized for these parameters");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace genrl::numkit
