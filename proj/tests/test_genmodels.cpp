#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "genrl/error.hpp"
#include "genrl/evalmetrics/knn_pr.hpp"
#include "genrl/genmodels/arch.hpp"
#include "genrl/genmodels/infogan.hpp"
#include "genrl/genmodels/vae.hpp"
#include "genrl/trajenv/dataset.hpp"
#include "oracles.hpp"

using namespace genrl;
using namespace genrl::genmodels;
using numkit::Activation;
using numkit::Matrix;
using numkit::Mlp;
using numkit::Mode;
using numkit::RngStream;

namespace {

constexpr double kTwoLogTwo = 1.3862943611198906;  // 2 ln 2
constexpr double kLogTwoPi = 1.8378770664093453;   // ln 2 pi

// Minimal shape used by the hand fixtures: 2 steps of 2 actions.
TrajShape tiny_shape() { return TrajShape{2, 2}; }

VaeModel zero_vae(std::size_t latent_dim) {
  const TrajShape shape = tiny_shape();
  VaeModel model;
  model.encoder = Mlp({shape.flat_dim(), 2 * latent_dim}, {Activation::Identity}, {false});
  model.gen.decoder = Mlp({latent_dim, shape.flat_dim()}, {Activation::Identity}, {false});
  model.gen.prior = Prior{PriorKind::StdNormal, latent_dim};
  model.gen.shape = shape;
  return model;
}

InfoGanModel small_infogan(std::uint64_t seed) {
  const TrajShape shape = tiny_shape();
  RngStream rng(seed, 0);
  InfoGanModel model;
  model.gen.decoder = Mlp::init_random({2, 5, shape.flat_dim()},
                                       {Activation::ReLU, Activation::Identity},
                                       {true, false}, rng);
  model.gen.prior = Prior{PriorKind::Uniform, 2};
  model.gen.shape = shape;
  model.trunk = Mlp::init_random({shape.flat_dim(), 6}, {Activation::ReLU}, {false}, rng);
  model.disc_head = Mlp::init_random({6, 1}, {Activation::Identity}, {false}, rng);
  model.q_head = Mlp::init_random({6, 4}, {Activation::Identity}, {false}, rng);
  model.validate();
  return model;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("vae loss: closed-form kl at fixed posterior parameters") {
  VaeModel model = zero_vae(1);
  const Matrix batch(4, tiny_shape().flat_dim());  // zeros

  SUBCASE("mu = 1, log sigma = 0 gives kl = 1/2") {
    model.encoder.layers()[0].bias = {1.0, 0.0};
    RngStream rng(7, 0);
    const VaeBatchResult r = vae_loss(model, batch, 0.3, rng);
    CHECK(r.loss.kl == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.loss.recon == 0.0);  // zero decoder on a zero batch
    CHECK(r.loss.total == doctest::Approx(0.3 * 0.5).epsilon(1e-12));
  }
  SUBCASE("mu = 0, log sigma = 1 gives kl = (e^2 - 3) / 2") {
    model.encoder.layers()[0].bias = {0.0, 1.0};
    RngStream rng(7, 0);
    const VaeBatchResult r = vae_loss(model, batch, 1.0, rng);
    CHECK(r.loss.kl ==
          doctest::Approx(0.5 * (std::exp(2.0) - 3.0)).epsilon(1e-12));
  }
  SUBCASE("standard-normal posterior gives exactly zero") {
    RngStream rng(7, 0);
    const VaeBatchResult r = vae_loss(model, batch, 5.0, rng);
    CHECK(r.loss.kl == 0.0);
    CHECK(r.loss.recon == 0.0);
    CHECK(r.loss.total == 0.0);
  }
}

TEST_CASE("vae loss: gradients match finite differences") {
  const TrajShape shape = tiny_shape();
  RngStream init(13, 0);
  for (bool use_bn : {false, true}) {
    VaeModel model;
    model.encoder = Mlp::init_random({shape.flat_dim(), 6, 4},
                                     {Activation::ReLU, Activation::Identity},
                                     {use_bn, false}, init);
    model.gen.decoder = Mlp::init_random({2, 6, shape.flat_dim()},
                                         {Activation::Tanh, Activation::Identity},
                                         {use_bn, false}, init);
    model.gen.prior = Prior{PriorKind::StdNormal, 2};
    model.gen.shape = shape;

    RngStream data_rng(14, 0);
    const Matrix batch = random_matrix(5, shape.flat_dim(), data_rng);
    const double beta = 0.7;

    // Same noise stream every evaluation, so the loss is a deterministic
    // function of the parameters.
    const auto total_at = [&](const VaeModel& m) {
      RngStream noise(15, 0);
      return vae_loss(m, batch, beta, noise).loss.total;
    };

    RngStream noise(15, 0);
    const VaeBatchResult r = vae_loss(model, batch, beta, noise);

    const auto f_enc = [&](const std::vector<double>& p) {
      VaeModel m = model;
      m.encoder.set_flat_params(p);
      return total_at(m);
    };
    CHECK(oracle::max_rel_err(r.encoder_grads,
                              oracle::fd_gradient(f_enc, model.encoder.flat_params())) < 1e-4);

    const auto f_dec = [&](const std::vector<double>& p) {
      VaeModel m = model;
      m.gen.decoder.set_flat_params(p);
      return total_at(m);
    };
    CHECK(oracle::max_rel_err(r.decoder_grads,
                              oracle::fd_gradient(f_dec, model.gen.decoder.flat_params())) <
          1e-4);
  }
}

TEST_CASE("vae: beta schedule grows above target and freezes at it") {
  const double inc = 0.001;
  CHECK(beta_schedule_step(0.1, 3.0, 2.5, inc) == doctest::Approx(0.101).epsilon(1e-12));
  CHECK(beta_schedule_step(0.1, 2.0, 2.5, inc) == 0.1);
  CHECK(beta_schedule_step(0.1, 2.5, 2.5, inc) == 0.1);  // target counts as reached

  trajenv::Environment env = trajenv::make_linear_env();
  RngStream data_rng(23, 0);
  const trajenv::TrajectoryDataset data = trajenv::gen_demos(env, 24, 0.1, data_rng);

  ModelArch arch;
  arch.decoder_hidden = {8};
  TrainConfig config;
  config.epochs = 30;
  config.batch_size = 24;
  config.learning_rate = 1e-3;
  config.seed = 5;

  // Unreachably high target: frozen at zero from the first epoch.
  const VaeTrainResult high = train_vae(data, arch, config, 1e6);
  for (const VaeLogRow& row : high.log) CHECK(row.beta == 0.0);
  CHECK(high.model.beta == 0.0);

  // Unreachably low target: grows every epoch and never freezes.
  const VaeTrainResult low = train_vae(data, arch, config, 1e-6);
  REQUIRE(low.log.size() == 30);
  for (std::size_t e = 1; e < low.log.size(); ++e)
    CHECK(low.log[e].beta > low.log[e - 1].beta);
}

TEST_CASE("vae training: overfits a small corpus and reproduces bitwise") {
  trajenv::Environment env = trajenv::make_linear_env();
  RngStream data_rng(31, 0);
  const trajenv::TrajectoryDataset data = trajenv::gen_demos(env, 32, 0.1, data_rng);

  // The corpus spans goal coordinates plus cosine noise coefficients, so
  // the latent space must be wide enough to absorb both. Normalization is
  // off: batch statistics over 32 memorizable rows drown the latent signal.
  ModelArch arch;
  arch.latent_dim = 8;
  arch.decoder_hidden = {32, 32};
  arch.batch_norm = false;
  TrainConfig config;
  config.epochs = 2000;
  config.batch_size = 16;
  config.learning_rate = 5e-3;
  config.seed = 9;

  const VaeTrainResult result = train_vae(data, arch, config, 2.5);
  CHECK_FALSE(result.failed_epoch.has_value());
  REQUIRE(result.log.size() == 2000);
  CHECK(result.log.back().recon < result.log.front().recon);

  const Matrix recon = result.model.reconstruct(data.trajectories);
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < data.trajectories.rows(); ++i)
    for (std::size_t j = 0; j < data.trajectories.cols(); ++j) {
      const double d = recon(i, j) - data.trajectories(i, j);
      err += d * d;
      norm += data.trajectories(i, j) * data.trajectories(i, j);
    }
  CHECK(err / norm < 0.01);

  // Reconstruction runs the decoder with frozen statistics: repeatable.
  CHECK(result.model.reconstruct(data.trajectories) == recon);

  const VaeTrainResult again = train_vae(data, arch, config, 2.5);
  CHECK(again.model.gen.decoder.flat_params() == result.model.gen.decoder.flat_params());
  CHECK(again.model.encoder.flat_params() == result.model.encoder.flat_params());

  TrainConfig other = config;
  other.seed = 10;
  const VaeTrainResult different = train_vae(data, arch, other, 2.5);
  CHECK(different.model.gen.decoder.flat_params() !=
        result.model.gen.decoder.flat_params());
}

TEST_CASE("vae model: prior kind is validated") {
  VaeModel model = zero_vae(1);
  model.gen.prior = Prior{PriorKind::Uniform, 1};
  CHECK_THROWS_AS(model.validate(), ContractError);
}

TEST_CASE("infogan loss: zeroed heads give the symmetric closed forms") {
  InfoGanModel model = small_infogan(41);
  RngStream rng(42, 0);
  const Matrix real = random_matrix(6, 4, rng);
  const Matrix latents = model.gen.prior.sample(6, rng);

  SUBCASE("zero discriminator head: p = 1/2 everywhere") {
    model.disc_head = Mlp({6, 1}, {Activation::Identity}, {false});
    const InfoGanBatchResult r = infogan_losses(model, real, latents);
    CHECK(r.loss.d_loss == doctest::Approx(kTwoLogTwo).epsilon(1e-12));
    CHECK(r.loss.g_loss == doctest::Approx(0.5 * kTwoLogTwo).epsilon(1e-12));
    CHECK(r.loss.clamp_events == 0);
  }
  SUBCASE("zero recognition head on zero latents: pure normalization term") {
    model.q_head = Mlp({6, 4}, {Activation::Identity}, {false});
    const Matrix zero_latents(6, 2);
    const InfoGanBatchResult r = infogan_losses(model, real, zero_latents);
    // Per latent dimension: 1/2 ln 2pi with mu = log sigma = alpha = 0.
    CHECK(r.loss.info_loss == doctest::Approx(kLogTwoPi).epsilon(1e-12));
  }
}

TEST_CASE("infogan loss: saturated discriminator clamps and zeroes gradients") {
  InfoGanModel model = small_infogan(43);
  model.disc_head = Mlp({6, 1}, {Activation::Identity}, {false});
  model.disc_head.layers()[0].bias = {30.0};  // sigmoid(30) rounds into the clamp

  RngStream rng(44, 0);
  const Matrix real = random_matrix(6, 4, rng);
  const Matrix latents = model.gen.prior.sample(6, rng);
  const InfoGanBatchResult r = infogan_losses(model, real, latents);
  CHECK(r.loss.clamp_events == 12);  // both sides of both batches
  for (double g : r.dloss_disc_head) CHECK(g == 0.0);
}

TEST_CASE("infogan loss: gradients match finite differences") {
  InfoGanModel model = small_infogan(45);
  RngStream rng(46, 0);
  const Matrix real = random_matrix(6, 4, rng);
  const Matrix latents = model.gen.prior.sample(6, rng);

  const InfoGanBatchResult r = infogan_losses(model, real, latents);
  REQUIRE(r.loss.clamp_events == 0);

  const auto losses_at = [&](const InfoGanModel& m) {
    return infogan_losses(m, real, latents, Mode::Train, false, false).loss;
  };

  SUBCASE("d_loss through trunk and discriminator head") {
    const auto f_trunk = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.trunk.set_flat_params(p);
      return losses_at(m).d_loss;
    };
    CHECK(oracle::max_rel_err(r.dloss_trunk,
                              oracle::fd_gradient(f_trunk, model.trunk.flat_params())) < 1e-4);

    const auto f_head = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.disc_head.set_flat_params(p);
      return losses_at(m).d_loss;
    };
    CHECK(oracle::max_rel_err(r.dloss_disc_head,
                              oracle::fd_gradient(f_head, model.disc_head.flat_params())) <
          1e-4);
  }
  SUBCASE("g_loss through the generator") {
    const auto f_gen = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.gen.decoder.set_flat_params(p);
      return losses_at(m).g_loss;
    };
    CHECK(oracle::max_rel_err(r.gloss_gen,
                              oracle::fd_gradient(f_gen, model.gen.decoder.flat_params())) <
          1e-4);
  }
  SUBCASE("info_loss through generator, trunk, and recognition head") {
    const auto f_gen = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.gen.decoder.set_flat_params(p);
      return losses_at(m).info_loss;
    };
    CHECK(oracle::max_rel_err(r.info_gen,
                              oracle::fd_gradient(f_gen, model.gen.decoder.flat_params())) <
          1e-4);

    const auto f_trunk = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.trunk.set_flat_params(p);
      return losses_at(m).info_loss;
    };
    CHECK(oracle::max_rel_err(r.info_trunk,
                              oracle::fd_gradient(f_trunk, model.trunk.flat_params())) < 1e-4);

    const auto f_q = [&](const std::vector<double>& p) {
      InfoGanModel m = model;
      m.q_head.set_flat_params(p);
      return losses_at(m).info_loss;
    };
    CHECK(oracle::max_rel_err(r.info_q,
                              oracle::fd_gradient(f_q, model.q_head.flat_params())) < 1e-4);
  }
}

TEST_CASE("infogan training: stable on a toy corpus, covers the data") {
  trajenv::Environment env = trajenv::make_linear_env();
  RngStream data_rng(51, 0);
  const trajenv::TrajectoryDataset data = trajenv::gen_demos(env, 64, 0.1, data_rng);

  ModelArch arch;
  arch.decoder_hidden = {16, 16};
  arch.trunk_hidden = {16};
  arch.q_head_hidden = {8};
  TrainConfig config;
  config.epochs = 200;
  config.batch_size = 32;
  config.learning_rate = 1e-3;
  config.seed = 3;

  const InfoGanTrainResult result = train_infogan(data, arch, config, 1.5);
  CHECK_FALSE(result.failed_epoch.has_value());
  REQUIRE(result.log.size() == 200);
  CHECK(std::isfinite(result.log.back().d_loss));
  CHECK(std::isfinite(result.log.back().info_loss));

  // Generated end states should land on the demonstrated end states often
  // enough for a coarse coverage check.
  RngStream sample_rng(52, 0);
  const Matrix trajs = result.model.gen.sample(200, sample_rng);
  const Matrix ends = trajenv::exe_batch(env, trajs);
  const evalmetrics::PrResult pr = evalmetrics::precision_recall(data.end_states, ends, 3);
  CHECK(pr.recall > 0.3);

  const InfoGanTrainResult again = train_infogan(data, arch, config, 1.5);
  CHECK(again.model.gen.decoder.flat_params() == result.model.gen.decoder.flat_params());
  CHECK(again.model.trunk.flat_params() == result.model.trunk.flat_params());
}

TEST_CASE("infogan training: lambda = 0 leaves the recognition head untouched") {
  trajenv::Environment env = trajenv::make_linear_env();
  RngStream data_rng(61, 0);
  const trajenv::TrajectoryDataset data = trajenv::gen_demos(env, 32, 0.1, data_rng);

  ModelArch arch;
  arch.decoder_hidden = {8};
  arch.trunk_hidden = {8};
  arch.q_head_hidden = {4};
  TrainConfig config;
  config.epochs = 5;
  config.batch_size = 32;
  config.seed = 2;

  const InfoGanTrainResult result = train_infogan(data, arch, config, 0.0);

  // Rebuild the initial recognition head from its dedicated stream.
  RngStream qhead_rng = RngStream(config.seed, 19).split(4);
  const Mlp q0 = build_q_head(arch, qhead_rng);
  CHECK(result.model.q_head.flat_params() == q0.flat_params());
}

TEST_CASE("infogan model: prior kind is validated") {
  InfoGanModel model = small_infogan(71);
  model.gen.prior = Prior{PriorKind::StdNormal, 2};
  CHECK_THROWS_AS(model.validate(), ContractError);
}
