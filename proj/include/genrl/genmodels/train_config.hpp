#pragma once

#include <cstdint>
#include <cstddef>

namespace genrl::genmodels {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double learning_rate = 2e-4;
  std::uint64_t seed = 0;
};

}  // namespace genrl::genmodels
