#include "genrl/genmodels/vae.hpp"

#include <cmath>
#include <sstream>

#include "genrl/error.hpp"
#include "genrl/numkit/adam.hpp"
#include "genrl/numkit/clamp.hpp"

namespace genrl::genmodels {

using numkit::AdamState;
using numkit::clamp_mask;
using numkit::clamp_value;
using numkit::ForwardCache;
using numkit::Mode;

// Stability bounds on the posterior log sigma; wide enough to stay
// inactive except for pathological weights.
constexpr double kLogSigLo = -6.0;
constexpr double kLogSigHi = 3.0;

void VaeModel::validate() const {
  gen.validate();
  require(!encoder.empty(), "VaeModel: empty encoder");
  require(encoder.in_dim() == gen.shape.flat_dim(), "VaeModel: encoder input width mismatch");
  require(encoder.out_dim() == 2 * gen.prior.dim, "VaeModel: encoder must emit mu and log sigma");
  require(gen.prior.kind == PriorKind::StdNormal, "VaeModel: prior must be standard normal");
}

Matrix VaeModel::reconstruct(const Matrix& batch) const {
  const Matrix enc = encoder.forward(batch, Mode::Eval);
  const std::size_t latent = gen.prior.dim;
  Matrix mu(batch.rows(), latent);
  for (std::size_t i = 0; i < batch.rows(); ++i)
    for (std::size_t j = 0; j < latent; ++j) mu(i, j) = enc(i, j);
  return gen.decode(mu);
}

VaeBatchResult vae_loss(const VaeModel& model, const Matrix& batch, double beta,
                        RngStream& rng, Mode mode) {
  const std::size_t n = batch.rows();
  const std::size_t latent = model.gen.prior.dim;
  const std::size_t width = batch.cols();
  require(n >= 1, "vae_loss: empty batch");
  require(width == model.gen.shape.flat_dim(), "vae_loss: batch width mismatch");

  VaeBatchResult out;
  const Matrix enc = model.encoder.forward(batch, mode, out.encoder_cache);

  Matrix mu(n, latent), logsig(n, latent), mask(n, latent), z(n, latent), alpha(n, latent);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < latent; ++j) {
      mu(i, j) = enc(i, j);
      const double raw = enc(i, latent + j);
      logsig(i, j) = clamp_value(raw, kLogSigLo, kLogSigHi);
      mask(i, j) = clamp_mask(raw, kLogSigLo, kLogSigHi);
      z(i, j) = rng.gaussian();
      alpha(i, j) = mu(i, j) + std::exp(logsig(i, j)) * z(i, j);
    }
  }

  const Matrix recon = model.gen.decoder.forward(alpha, mode, out.decoder_cache);

  const double inv_elems = 1.0 / static_cast<double>(n * width);
  double recon_loss = 0.0;
  Matrix recon_grad(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const double d = recon(i, j) - batch(i, j);
      recon_loss += d * d * inv_elems;
      recon_grad(i, j) = 2.0 * d * inv_elems;
    }
  }

  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < latent; ++j) {
      const double m = mu(i, j);
      const double ls = logsig(i, j);
      kl += 0.5 * (m * m + std::exp(2.0 * ls) - 1.0 - 2.0 * ls);
    }
  }
  kl /= static_cast<double>(n);
  if (!(kl >= -1e-12))
    throw NumericError("vae_loss: KL term went negative or non-finite");

  out.loss.recon = recon_loss;
  out.loss.kl = kl;
  out.loss.total = recon_loss + beta * kl;

  const auto dec_grads = model.gen.decoder.backward(out.decoder_cache, recon_grad);
  out.decoder_grads = dec_grads.params;

  // Chain into the encoder outputs: reparameterization plus the KL term.
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix enc_upstream(n, 2 * latent);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < latent; ++j) {
      const double dalpha = dec_grads.input(i, j);
      const double sig = std::exp(logsig(i, j));
      enc_upstream(i, j) = dalpha + beta * mu(i, j) * inv_n;
      enc_upstream(i, latent + j) =
          mask(i, j) * (dalpha * sig * z(i, j) +
                        beta * (std::exp(2.0 * logsig(i, j)) - 1.0) * inv_n);
    }
  }
  out.encoder_grads = model.encoder.backward(out.encoder_cache, enc_upstream).params;
  return out;
}

double beta_schedule_step(double current_beta, double observed_kl, double kl_target,
                          double increment) {
  return observed_kl > kl_target ? current_beta + increment : current_beta;
}

VaeTrainResult train_vae(const trajenv::TrajectoryDataset& data, const ModelArch& arch,
                         const TrainConfig& config, double kl_target) {
  require(data.count() >= 2, "train_vae: need at least two trajectories");
  require(config.batch_size >= 2, "train_vae: batch size must be at least 2");
  require(kl_target > 0.0, "train_vae: KL target must be positive");

  RngStream root(config.seed, 17);
  RngStream enc_rng = root.split(1);
  RngStream dec_rng = root.split(2);

  const TrajShape shape{data.horizon, data.action_dim};
  VaeTrainResult result;
  VaeModel& model = result.model;
  model.encoder = build_encoder(arch, shape, enc_rng);
  model.gen.decoder = build_decoder(arch, shape, dec_rng);
  model.gen.prior = Prior{PriorKind::StdNormal, arch.latent_dim};
  model.gen.shape = shape;
  model.kl_target = kl_target;
  model.validate();

  AdamState enc_state(model.encoder.param_count(), config.learning_rate);
  AdamState dec_state(model.gen.decoder.param_count(), config.learning_rate);

  const double increment = kl_target * kBetaIncrementFactor;
  double beta = 0.0;
  bool frozen = false;
  VaeModel checkpoint = model;

  const std::size_t n = data.count();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream erng = root.split(1000 + epoch);
    const auto order = erng.permutation(n);
    double sum_recon = 0.0, sum_kl = 0.0;
    std::size_t seen = 0;
    try {
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t count = std::min(config.batch_size, n - start);
        if (count < 2) continue;  // batch statistics need two rows
        std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
        const Matrix batch = numkit::take_rows(data.trajectories, idx);
        RngStream brng = erng.split(start);

        auto r = vae_loss(model, batch, beta, brng, Mode::Train);
        if (!std::isfinite(r.loss.total)) {
          std::ostringstream msg;
          msg << "train_vae: non-finite loss at epoch " << epoch << " batch " << start;
          throw NumericError(msg.str());
        }

        auto enc_params = model.encoder.flat_params();
        adam_step(enc_state, enc_params, r.encoder_grads);
        model.encoder.set_flat_params(enc_params);
        auto dec_params = model.gen.decoder.flat_params();
        adam_step(dec_state, dec_params, r.decoder_grads);
        model.gen.decoder.set_flat_params(dec_params);
        model.encoder.absorb_batch_stats(r.encoder_cache);
        model.gen.decoder.absorb_batch_stats(r.decoder_cache);

        sum_recon += r.loss.recon * static_cast<double>(count);
        sum_kl += r.loss.kl * static_cast<double>(count);
        seen += count;
      }
    } catch (const NumericError&) {
      model = checkpoint;
      result.failed_epoch = epoch;
      break;
    }
    const double mean_recon = sum_recon / static_cast<double>(seen);
    const double mean_kl = sum_kl / static_cast<double>(seen);
    result.log.push_back({epoch, mean_recon, mean_kl, beta});
    if (!frozen) {
      if (mean_kl <= kl_target)
        frozen = true;
      else
        beta = beta_schedule_step(beta, mean_kl, kl_target, increment);
    }
    checkpoint = model;
  }
  model.beta = beta;
  return result;
}

}  // namespace genrl::genmodels
