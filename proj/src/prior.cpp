#include "genrl/genmodels/prior.hpp"

#include "genrl/error.hpp"

namespace genrl::genmodels {

Matrix Prior::sample(std::size_t n, RngStream& rng) const {
  Matrix out(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out(i, j) = kind == PriorKind::StdNormal ? rng.gaussian() : rng.uniform(-1.0, 1.0);
  return out;
}

std::string prior_kind_name(PriorKind kind) {
  return kind == PriorKind::StdNormal ? "std_normal" : "uniform";
}

PriorKind prior_kind_from_name(const std::string& name) {
  if (name == "std_normal") return PriorKind::StdNormal;
  if (name == "uniform") return PriorKind::Uniform;
  throw ContractError("unknown prior kind: " + name);
}

}  // namespace genrl::genmodels
