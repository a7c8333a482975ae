#include "genrl/genmodels/arch.hpp"

namespace genrl::genmodels {

using numkit::Activation;
using numkit::Mlp;

namespace {

Mlp build_stack(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                Activation hidden_act, bool bn, RngStream& rng) {
  std::vector<std::size_t> dims;
  dims.push_back(in);
  for (auto h : hidden) dims.push_back(h);
  dims.push_back(out);
  std::vector<Activation> acts(hidden.size(), hidden_act);
  acts.push_back(Activation::Identity);
  std::vector<bool> use_bn(hidden.size(), bn);
  use_bn.push_back(false);
  return Mlp::init_random(dims, acts, use_bn, rng);
}

}  // namespace

Mlp build_decoder(const ModelArch& arch, const TrajShape& shape, RngStream& rng) {
  return build_stack(arch.latent_dim, arch.decoder_hidden, shape.flat_dim(),
                     Activation::ReLU, arch.batch_norm, rng);
}

Mlp build_encoder(const ModelArch& arch, const TrajShape& shape, RngStream& rng) {
  std::vector<std::size_t> hidden(arch.decoder_hidden.rbegin(), arch.decoder_hidden.rend());
  return build_stack(shape.flat_dim(), hidden, 2 * arch.latent_dim,
                     Activation::ReLU, arch.batch_norm, rng);
}

Mlp build_trunk(const ModelArch& arch, const TrajShape& shape, RngStream& rng) {
  // All-ReLU feature stack; the last hidden width is the feature dim.
  std::vector<std::size_t> dims;
  dims.push_back(shape.flat_dim());
  for (auto h : arch.trunk_hidden) dims.push_back(h);
  std::vector<Activation> acts(arch.trunk_hidden.size(), Activation::ReLU);
  std::vector<bool> use_bn(arch.trunk_hidden.size(), false);
  return Mlp::init_random(dims, acts, use_bn, rng);
}

Mlp build_disc_head(const ModelArch& arch, RngStream& rng) {
  return Mlp::init_random({arch.trunk_hidden.back(), 1}, {Activation::Identity}, {false}, rng);
}

Mlp build_q_head(const ModelArch& arch, RngStream& rng) {
  return build_stack(arch.trunk_hidden.back(), arch.q_head_hidden, 2 * arch.latent_dim,
                     Activation::ReLU, false, rng);
}

}  // namespace genrl::genmodels
