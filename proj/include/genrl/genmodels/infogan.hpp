#pragma once

#include <optional>
#include <vector>

#include "genrl/genmodels/arch.hpp"
#include "genrl/genmodels/train_config.hpp"
#include "genrl/trajenv/dataset.hpp"

namespace genrl::genmodels {

// Generator + discriminator + latent-recognition head. The recognition
// head reads the same trunk features as the discriminator head, so both
// outputs move when the trunk moves.
struct InfoGanModel {
  GenerativeModel gen;     // prior is Uniform(-1,1)
  numkit::Mlp trunk;       // trajectory -> shared features
  numkit::Mlp disc_head;   // features -> single logit
  numkit::Mlp q_head;      // features -> [mu_q | log sigma_q]
  double lambda = 1.5;

  void validate() const;

  // Sigmoid probabilities, clamped away from {0, 1}.
  std::vector<double> discriminate(const Matrix& batch) const;
};

// Probabilities are clamped to [eps, 1-eps] before any log; each clamped
// sample counts as one event.
inline constexpr double kDiscClampEps = 1e-7;

struct InfoGanLossTerms {
  double d_loss = 0.0;     // -mean log D(real) - mean log(1 - D(fake))
  double g_loss = 0.0;     // -mean log D(fake), the non-saturating form
  double info_loss = 0.0;  // mean Gaussian NLL of the latents under the q head
  std::size_t clamp_events = 0;
};

struct InfoGanBatchResult {
  InfoGanLossTerms loss;
  // d_loss gradients treat the generated batch as a fixed input.
  std::vector<double> dloss_trunk, dloss_disc_head;
  // g_loss reaches only the generator (through frozen trunk and head).
  std::vector<double> gloss_gen;
  // info_loss reaches all three nets it flows through.
  std::vector<double> info_gen, info_trunk, info_q;
  numkit::ForwardCache gen_cache;  // Train-mode cache for normalization stats
};

// Losses and gradients on one batch. latent_batch drives the generated
// samples; compute_d / compute_g skip the respective backward passes.
InfoGanBatchResult infogan_losses(const InfoGanModel& model, const Matrix& real_batch,
                                  const Matrix& latent_batch,
                                  numkit::Mode gen_mode = numkit::Mode::Train,
                                  bool compute_d = true, bool compute_g = true);

struct InfoGanLogRow {
  std::size_t epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double info_loss = 0.0;
};

struct InfoGanTrainResult {
  InfoGanModel model;
  std::vector<InfoGanLogRow> log;
  std::optional<std::size_t> failed_epoch;
  std::size_t clamp_events = 0;
};

// Alternating one discriminator step (d_loss into trunk + head) and one
// generator step (g_loss + lambda * info_loss into generator + q head) per
// batch. With lambda = 0 the q head is left untouched.
InfoGanTrainResult train_infogan(const trajenv::TrajectoryDataset& data, const ModelArch& arch,
                                 const TrainConfig& config, double lambda);

}  // namespace genrl::genmodels
