#pragma once

#include <vector>

#include "genrl/genmodels/generative_model.hpp"

namespace genrl::genmodels {

// Layer widths for the model family. The defaults are a 4x-scaled-down
// desk configuration; full_scale() restores the original widths.
struct ModelArch {
  std::size_t latent_dim = 2;
  std::vector<std::size_t> decoder_hidden = {32, 64, 128};
  std::vector<std::size_t> trunk_hidden = {64, 32};
  std::vector<std::size_t> q_head_hidden = {16};
  bool batch_norm = true;  // decoder/encoder hidden layers

  static ModelArch full_scale(std::size_t latent_dim) {
    ModelArch a;
    a.latent_dim = latent_dim;
    a.decoder_hidden = {128, 256, 512};
    a.trunk_hidden = {256, 128};
    a.q_head_hidden = {64};
    return a;
  }
};

// latent -> hidden (BatchNorm+ReLU) -> flat trajectory (linear).
numkit::Mlp build_decoder(const ModelArch& arch, const TrajShape& shape, RngStream& rng);

// Mirror of the decoder: trajectory -> hidden -> [mu | log sigma] (linear).
numkit::Mlp build_encoder(const ModelArch& arch, const TrajShape& shape, RngStream& rng);

// Shared discriminator/recognition feature stack: trajectory -> ReLU layers.
numkit::Mlp build_trunk(const ModelArch& arch, const TrajShape& shape, RngStream& rng);

// Features -> single real-valued logit.
numkit::Mlp build_disc_head(const ModelArch& arch, RngStream& rng);

// Features -> [mu_q | log sigma_q] for the latent reconstruction head.
numkit::Mlp build_q_head(const ModelArch& arch, RngStream& rng);

}  // namespace genrl::genmodels
