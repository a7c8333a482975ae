#pragma once

#include <optional>
#include <vector>

#include "genrl/genmodels/arch.hpp"
#include "genrl/genmodels/train_config.hpp"
#include "genrl/trajenv/dataset.hpp"

namespace genrl::genmodels {

struct VaeModel {
  numkit::Mlp encoder;  // trajectory -> [mu | log sigma]
  GenerativeModel gen;
  double beta = 0.0;      // final schedule value after training
  double kl_target = 2.5;

  void validate() const;

  // Deterministic reconstruction: decode the posterior mean.
  Matrix reconstruct(const Matrix& batch) const;
};

struct VaeLossTerms {
  double recon = 0.0;  // mean squared error per trajectory entry
  double kl = 0.0;     // mean per-sample KL to the standard normal prior
  double total = 0.0;  // recon + beta * kl
};

struct VaeBatchResult {
  VaeLossTerms loss;
  std::vector<double> encoder_grads;
  std::vector<double> decoder_grads;
  numkit::ForwardCache encoder_cache;
  numkit::ForwardCache decoder_cache;
};

// Reparameterized objective on one batch: latents are mu + sigma * z with
// z drawn from rng row by row. The KL term is the closed diagonal-Gaussian
// form summed over latent dimensions and averaged over the batch; it is
// analytically nonnegative and asserted so.
VaeBatchResult vae_loss(const VaeModel& model, const Matrix& batch, double beta,
                        RngStream& rng, numkit::Mode mode = numkit::Mode::Train);

// One schedule move: beta grows by increment while the observed KL sits
// above the target, and is left unchanged otherwise. The training loop
// freezes beta permanently the first time the KL reaches the target.
double beta_schedule_step(double current_beta, double observed_kl, double kl_target,
                          double increment);

struct VaeLogRow {
  std::size_t epoch = 0;
  double recon = 0.0;
  double kl = 0.0;
  double beta = 0.0;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<VaeLogRow> log;
  // Set when a non-finite loss aborted training; the model is the last
  // epoch-end checkpoint.
  std::optional<std::size_t> failed_epoch;
};

// Per-epoch schedule increment as a fraction of the KL target.
inline constexpr double kBetaIncrementFactor = 1e-4;

VaeTrainResult train_vae(const trajenv::TrajectoryDataset& data, const ModelArch& arch,
                         const TrainConfig& config, double kl_target);

}  // namespace genrl::genmodels
