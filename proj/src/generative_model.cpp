#include "genrl/genmodels/generative_model.hpp"

#include "genrl/error.hpp"

namespace genrl::genmodels {

Matrix GenerativeModel::decode(const Matrix& latents) const {
  require(latents.cols() == prior.dim, "decode: latent width mismatch");
  return decoder.forward(latents, numkit::Mode::Eval);
}

Matrix GenerativeModel::sample(std::size_t n, RngStream& rng) const {
  return decode(prior.sample(n, rng));
}

void GenerativeModel::validate() const {
  require(!decoder.empty(), "GenerativeModel: empty decoder");
  require(decoder.in_dim() == prior.dim, "GenerativeModel: decoder input != prior dim");
  require(decoder.out_dim() == shape.flat_dim(),
          "GenerativeModel: decoder output != trajectory dim");
}

}  // namespace genrl::genmodels
