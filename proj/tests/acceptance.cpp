// Acceptance gate for the whole pipeline. Each criterion is a self-contained
// fixture with pinned seeds and tolerances; the binary prints one line per
// criterion and exits nonzero if any of them fails. Criteria can be selected
// by number on the command line (no arguments runs all of them).

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "genrl/empolicy/em.hpp"
#include "genrl/evalmetrics/dipr.hpp"
#include "genrl/evalmetrics/dwpr.hpp"
#include "genrl/evalmetrics/knn_pr.hpp"
#include "genrl/evalmetrics/l3.hpp"
#include "genrl/evalmetrics/mmd.hpp"
#include "genrl/evalmetrics/pearson.hpp"
#include "genrl/genmodels/arch.hpp"
#include "genrl/genmodels/infogan.hpp"
#include "genrl/genmodels/vae.hpp"
#include "genrl/io/json_io.hpp"
#include "genrl/numkit/linalg.hpp"
#include "genrl/trajenv/dataset.hpp"
#include "oracles.hpp"

using namespace genrl;
using namespace genrl::genmodels;
using namespace genrl::empolicy;
using genrl::io::json;
using numkit::Activation;
using numkit::Matrix;
using numkit::Mlp;
using numkit::RngStream;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string num17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Outcome {
  bool ok = true;
  std::string notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes += " FAILED[" + what + "]";
    }
  }
  void note(const std::string& key, double v) { notes += " " + key + "=" + num(v); }
  void note(const std::string& key, const std::string& v) { notes += " " + key + "=" + v; }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng, double shift = 0.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = shift + rng.gaussian();
  return m;
}

// Shared demonstration corpus: 2000 planar-integrator demos at noise 0.1.
const trajenv::TrajectoryDataset& corpus() {
  static const trajenv::TrajectoryDataset data = [] {
    trajenv::Environment env = trajenv::make_linear_env();
    RngStream rng(5, 11);
    return trajenv::gen_demos(env, 2000, 0.1, rng);
  }();
  return data;
}

// Affine decoder whose composite with the integrator lands latent
// (a0, a1) in [-1, 1]^2 exactly on the goal region.
GenerativeModel inverse_dynamics_model(const trajenv::Environment& env) {
  GenerativeModel model;
  model.prior = Prior{PriorKind::Uniform, 2};
  model.shape = TrajShape{env.horizon, env.action_dim};
  model.decoder = Mlp({2, model.shape.flat_dim()}, {Activation::Identity}, {false});
  auto& layer = model.decoder.layers()[0];
  layer.weight(0, 0) = 0.325 / env.dt;
  layer.weight(1, 1) = 0.4 / env.dt;
  layer.bias[0] = 0.975 / env.dt;
  return model;
}

// ---------------------------------------------------------------------------
// 1. The production unbiased MMD agrees with a naive triple-loop reference
//    on 50 random sample pairs (sizes 2..40, dimensions 1..8).

Outcome criterion1() {
  Outcome o;
  RngStream rng(101, 0);
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 50; ++c) {
    RngStream pair = rng.split(c);
    const std::size_t m = 2 + pair.uniform_below(39);
    const std::size_t n = 2 + pair.uniform_below(39);
    const std::size_t dim = 1 + pair.uniform_below(8);
    const double gamma = pair.uniform(0.1, 20.0);
    const Matrix sr = gaussian_matrix(m, dim, pair);
    const Matrix sg = gaussian_matrix(n, dim, pair, 0.3);
    const double got = evalmetrics::mmd2_unbiased(sr, sg, gamma);
    const double want = oracle::mmd2_unbiased(sr, sg, gamma);
    const double rel =
        std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-30});
    worst = std::max(worst, rel);
  }
  o.note("pairs", 50.0);
  o.note("max_rel_err", worst);
  o.require(worst < 1e-10, "agreement with the reference within 1e-10");
  return o;
}

// ---------------------------------------------------------------------------
// 2. The permutation test holds its significance level: two size-50 samples
//    from the same distribution are rejected at eta = 0.05 at a rate inside
//    0.05 +- 3 sqrt(0.05 * 0.95 / 500) over 500 trials.

Outcome criterion2() {
  Outcome o;
  evalmetrics::MmdConfig cfg;
  cfg.gamma = 15.0;
  cfg.eta = 0.05;
  RngStream rng(2024, 2);
  std::size_t rejects = 0;
  const std::size_t trials = 500;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream ts = rng.split(trial);
    Matrix a(50, 2), b(50, 2);
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        a(i, j) = ts.gaussian();
        b(i, j) = ts.gaussian();
      }
    if (evalmetrics::mmd_permutation_test(a, b, cfg, ts).significant) ++rejects;
  }
  const double rate = static_cast<double>(rejects) / static_cast<double>(trials);
  const double band = 3.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(trials));
  o.note("rate", rate);
  o.note("band", "0.05+-" + num(band));
  o.require(std::abs(rate - 0.05) <= band, "rejection rate inside the three-sigma band");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Hypersphere precision/recall on worked fixtures: identical sets score
//    exactly (1, 1), far-separated sets exactly (0, 0), and the 1-D example
//    {0, 1, 10} vs {0.5, 20} at k = 1 exactly (0.5, 1.0).

Outcome criterion3() {
  Outcome o;
  RngStream rng(103, 0);
  const Matrix x = gaussian_matrix(20, 3, rng);
  const evalmetrics::PrResult same = evalmetrics::precision_recall(x, x, 3);
  o.require(same.precision == 1.0 && same.recall == 1.0, "identical sets score (1, 1)");

  Matrix far = x;
  for (std::size_t i = 0; i < far.rows(); ++i)
    for (std::size_t j = 0; j < far.cols(); ++j) far(i, j) += 1e6;
  const evalmetrics::PrResult apart = evalmetrics::precision_recall(x, far, 2);
  o.require(apart.precision == 0.0 && apart.recall == 0.0, "separated sets score (0, 0)");

  Matrix tr(3, 1), tg(2, 1);
  tr(0, 0) = 0.0;
  tr(1, 0) = 1.0;
  tr(2, 0) = 10.0;
  tg(0, 0) = 0.5;
  tg(1, 0) = 20.0;
  const evalmetrics::PrResult hand = evalmetrics::precision_recall(tr, tg, 1);
  o.note("hand_precision", hand.precision);
  o.note("hand_recall", hand.recall);
  o.require(hand.precision == 0.5 && hand.recall == 1.0, "worked 1-D example scores (0.5, 1)");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Local linearity: an affine decoder composed with the planar integrator
//    scores below 1e-10 at the reference configuration (epsilon 0.2,
//    50 centers, 500 neighbors, 350/150 split); adding a quadratic term
//    raises the score by at least a factor of 1e3.

Outcome criterion4() {
  Outcome o;
  const trajenv::Environment env = trajenv::make_linear_env();
  const Prior prior{PriorKind::StdNormal, 2};
  RngStream wrng(301, 0);
  Matrix w(40, 2);
  std::vector<double> bias(40);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 2; ++j) w(i, j) = 0.3 * wrng.gaussian();
    bias[i] = 0.2 * wrng.gaussian();
  }
  const auto affine = [&](const Matrix& z) {
    Matrix out(z.rows(), 40);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t r = 0; r < 40; ++r) {
        double acc = bias[r];
        for (std::size_t j = 0; j < 2; ++j) acc += w(r, j) * z(i, j);
        out(i, r) = acc;
      }
    return out;
  };
  const auto quadratic = [&](const Matrix& z) {
    Matrix out = affine(z);
    for (std::size_t i = 0; i < z.rows(); ++i) out(i, 0) += 2.0 * z(i, 0) * z(i, 0);
    return out;
  };

  const evalmetrics::L3Config cfg;  // epsilon 0.2, 50 centers, 500 onto 350/150
  RngStream r1(302, 0), r2(302, 0);
  const evalmetrics::L3Result res_a = evalmetrics::l3(affine, prior, env, cfg, r1);
  const evalmetrics::L3Result res_q = evalmetrics::l3(quadratic, prior, env, cfg, r2);
  o.note("affine_mse", res_a.mean_mse);
  o.note("quadratic_mse", res_q.mean_mse);
  o.require(res_a.mean_mse < 1e-10, "affine composite scores under 1e-10");
  o.require(res_q.mean_mse >= 1e3 * std::max(res_a.mean_mse, 1e-300),
            "quadratic composite scores at least 1e3 times higher");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Intervention disentanglement on decoders with known structure, at the
//    reference configuration (5 interventions, 200 samples, 100 permutations,
//    10 repeats): a latent-blind resampler scores exactly (0, 0), a planar
//    identity composite covers both components, and a constant decoder
//    covers exactly half of them.

Outcome criterion5() {
  Outcome o;
  const trajenv::Environment env = trajenv::make_linear_env();
  const auto& data = corpus();
  const evalmetrics::DiprConfig cfg;  // defaults pin the reference configuration

  {  // identity composite: end state equals the latent draw
    const Prior prior{PriorKind::StdNormal, 2};
    const auto write_end = [&](const Matrix& z) {
      Matrix out(z.rows(), env.traj_dim(), 0.0);
      for (std::size_t i = 0; i < z.rows(); ++i) {
        out(i, 0) = z(i, 0) / env.dt;
        out(i, 1) = z(i, 1) / env.dt;
      }
      return out;
    };
    RngStream ref_rng(501, 0);
    const Matrix ref = gaussian_matrix(400, 2, ref_rng);
    RngStream rng(502, 0);
    const evalmetrics::DiprResult res = evalmetrics::dipr(write_end, prior, env, ref, cfg, rng);
    o.note("identity_dir", res.dir);
    o.note("identity_dip", res.dip);
    o.require(res.dir == 1.0, "identity composite covers both components");
    o.require(res.dip > 0.0, "identity composite has positive strength");
  }
  {  // constant decoder: every latent lands on one far end state
    const Prior prior{PriorKind::StdNormal, 2};
    const auto constant = [&](const Matrix& z) {
      Matrix out(z.rows(), env.traj_dim(), 0.0);
      for (std::size_t i = 0; i < z.rows(); ++i) out(i, 0) = 3.0 / env.dt;
      return out;
    };
    RngStream rng(503, 0);
    const evalmetrics::DiprResult res =
        evalmetrics::dipr(constant, prior, env, data.end_states, cfg, rng);
    o.note("constant_dir", res.dir);
    o.require(res.dir == 0.5, "constant decoder covers half the components");
    o.require(res.dip > 0.0, "constant decoder has positive strength");
  }
  {  // latent-blind resampler: generated end states match the corpus
    const Prior prior{PriorKind::StdNormal, 2};
    RngStream pick_rng(1607, 0);
    const auto resampler = [&](const Matrix& z) {
      Matrix out(z.rows(), env.traj_dim());
      for (std::size_t i = 0; i < z.rows(); ++i) {
        const std::size_t row = pick_rng.uniform_below(data.count());
        for (std::size_t c = 0; c < env.traj_dim(); ++c) out(i, c) = data.trajectories(row, c);
      }
      return out;
    };
    RngStream rng(607, 0);
    const evalmetrics::DiprResult res =
        evalmetrics::dipr(resampler, prior, env, data.end_states, cfg, rng);
    o.note("resampler_dip", res.dip);
    o.note("resampler_dir", res.dir);
    o.require(res.dip == 0.0 && res.dir == 0.0, "latent-blind resampler scores (0, 0)");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 6. Trajectory-space disentanglement at 5 x 400 = 2000 intervened samples
//    per dimension: a dimension the decoder ignores moves the score by less
//    than 0.05, and the 2-D identity decoder's top score both clears 0.5 and
//    reproduces its recorded value.

Outcome criterion6() {
  Outcome o;
  const evalmetrics::DwprConfig cfg;  // 5 interventions, 400 samples, k = 3
  const Prior prior{PriorKind::Uniform, 2};
  const auto oneway = [](const Matrix& z) {
    Matrix out(z.rows(), 2);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      out(i, 0) = z(i, 0);
      out(i, 1) = 2.0 * z(i, 0);
    }
    return out;
  };
  const auto identity = [](const Matrix& z) { return z; };

  RngStream r1(401, 0), r2(401, 0);
  const evalmetrics::DwprResult res_u = evalmetrics::dwpr(oneway, prior, cfg, r1);
  const evalmetrics::DwprResult res_i = evalmetrics::dwpr(identity, prior, cfg, r2);

  // Recorded top score of the identity decoder at this seed; a drift here
  // means the metric's numeric behavior changed.
  const double kRecordedIdentityDelta1 = 0.90249999999999997;

  o.note("unused_delta", res_u.delta[1]);
  o.note("identity_delta1", num17(res_i.delta1));
  o.require(std::abs(res_u.delta[1]) < 0.05, "unused dimension stays under 0.05");
  o.require(res_i.delta1 > 0.5, "identity decoder clears 0.5");
  o.require(std::abs(res_i.delta1 - kRecordedIdentityDelta1) < 1e-12,
            "identity decoder reproduces the recorded score");
  return o;
}

// ---------------------------------------------------------------------------
// 7. Every analytic gradient matches central finite differences to 1e-4
//    relative error on ten random nets per loss: the reconstruction
//    objective, the three adversarial losses, and the policy surrogate.

Outcome criterion7() {
  Outcome o;
  const TrajShape shape{5, 2};
  const std::size_t flat = shape.flat_dim();

  double worst_vae = 0.0;
  for (int i = 0; i < 10; ++i) {
    RngStream init(701 + i, 0);
    const std::size_t latent = 2 + i % 3;
    const std::size_t w_enc = 4 + (i * 3) % 13;
    const std::size_t w_dec = 4 + (i * 5) % 13;
    const bool bn = i % 2 == 1;
    VaeModel model;
    model.encoder = Mlp::init_random({flat, w_enc, 2 * latent},
                                     {Activation::ReLU, Activation::Identity}, {bn, false}, init);
    model.gen.decoder = Mlp::init_random(
        {latent, w_dec, flat}, {Activation::Tanh, Activation::Identity}, {bn, false}, init);
    model.gen.prior = Prior{PriorKind::StdNormal, latent};
    model.gen.shape = shape;
    RngStream data_rng(750 + i, 0);
    const Matrix batch = gaussian_matrix(6, flat, data_rng);
    const double beta = 0.3 + 0.1 * i;

    const auto total_at = [&](const VaeModel& m) {
      RngStream noise(7100 + i, 0);
      return vae_loss(m, batch, beta, noise).loss.total;
    };
    RngStream noise(7100 + i, 0);
    const VaeBatchResult r = vae_loss(model, batch, beta, noise);
    const auto f_enc = [&](const std::vector<double>& p) {
      VaeModel m = model;
      m.encoder.set_flat_params(p);
      return total_at(m);
    };
    const auto f_dec = [&](const std::vector<double>& p) {
      VaeModel m = model;
      m.gen.decoder.set_flat_params(p);
      return total_at(m);
    };
    worst_vae = std::max(
        worst_vae,
        oracle::max_rel_err(r.encoder_grads, oracle::fd_gradient(f_enc, model.encoder.flat_params())));
    worst_vae = std::max(worst_vae,
                         oracle::max_rel_err(r.decoder_grads,
                                             oracle::fd_gradient(f_dec, model.gen.decoder.flat_params())));
  }
  o.note("elbo_err", worst_vae);
  o.require(worst_vae < 1e-4, "reconstruction objective gradients match");

  double worst_gan = 0.0;
  bool clamped = false;
  for (int i = 0; i < 10; ++i) {
    RngStream init(761 + i, 0);
    const std::size_t latent = 2 + i % 2;
    const std::size_t gan_flat = 8;
    const std::size_t feat = 4 + (i * 2) % 13;
    const std::size_t w_g = 4 + (i * 7) % 13;
    const std::size_t w_q = 4 + (i * 3) % 13;
    InfoGanModel model;
    model.gen.decoder = Mlp::init_random(
        {latent, w_g, gan_flat}, {Activation::Tanh, Activation::Identity}, {false, false}, init);
    model.gen.prior = Prior{PriorKind::Uniform, latent};
    model.gen.shape = TrajShape{4, 2};
    // Smooth activations throughout: central differences are only valid away
    // from kinks, and random nets are not guaranteed to stay away from them.
    model.trunk = Mlp::init_random({gan_flat, feat}, {Activation::Tanh}, {false}, init);
    model.disc_head = Mlp::init_random({feat, 1}, {Activation::Identity}, {false}, init);
    model.q_head = Mlp::init_random({feat, w_q, 2 * latent},
                                    {Activation::Tanh, Activation::Identity}, {false, false}, init);
    RngStream rng(790 + i, 0);
    const Matrix real = gaussian_matrix(6, gan_flat, rng);
    const Matrix latents = model.gen.prior.sample(6, rng);

    const InfoGanBatchResult r = infogan_losses(model, real, latents);
    if (r.loss.clamp_events != 0) {
      clamped = true;
      continue;
    }
    const auto losses_at = [&](const InfoGanModel& m) {
      return infogan_losses(m, real, latents, numkit::Mode::Train, false, false).loss;
    };
    const auto fd_block = [&](auto setter, const std::vector<double>& params,
                              const std::vector<double>& grads, auto pick) {
      const auto f = [&](const std::vector<double>& p) {
        InfoGanModel m = model;
        setter(m, p);
        return pick(losses_at(m));
      };
      worst_gan = std::max(worst_gan, oracle::max_rel_err(grads, oracle::fd_gradient(f, params)));
    };
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.trunk.set_flat_params(p); },
             model.trunk.flat_params(), r.dloss_trunk,
             [](const InfoGanLossTerms& l) { return l.d_loss; });
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.disc_head.set_flat_params(p); },
             model.disc_head.flat_params(), r.dloss_disc_head,
             [](const InfoGanLossTerms& l) { return l.d_loss; });
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.gen.decoder.set_flat_params(p); },
             model.gen.decoder.flat_params(), r.gloss_gen,
             [](const InfoGanLossTerms& l) { return l.g_loss; });
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.gen.decoder.set_flat_params(p); },
             model.gen.decoder.flat_params(), r.info_gen,
             [](const InfoGanLossTerms& l) { return l.info_loss; });
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.trunk.set_flat_params(p); },
             model.trunk.flat_params(), r.info_trunk,
             [](const InfoGanLossTerms& l) { return l.info_loss; });
    fd_block([](InfoGanModel& m, const std::vector<double>& p) { m.q_head.set_flat_params(p); },
             model.q_head.flat_params(), r.info_q,
             [](const InfoGanLossTerms& l) { return l.info_loss; });
  }
  o.note("adversarial_err", worst_gan);
  o.require(!clamped, "no probability clamps in the adversarial nets");
  o.require(worst_gan < 1e-4, "adversarial loss gradients match");

  double worst_estep = 0.0;
  bool ratio_clamped = false;
  for (int i = 0; i < 10; ++i) {
    const auto make_small_policy = [](std::size_t latent, std::uint64_t seed) {
      RngStream rng(seed, 0);
      GaussianPolicy policy;
      policy.latent_dim = latent;
      policy.net = Mlp::init_random({2, 8, 2 * latent},
                                    {Activation::Tanh, Activation::Identity}, {false, false}, rng);
      auto& bias = policy.net.layers().back().bias;
      for (std::size_t j = latent; j < 2 * latent; ++j) bias[j] = kLogSigmaBiasInit;
      return policy;
    };
    const GaussianPolicy pi = make_small_policy(2, 771 + i);
    // q starts as a small perturbation of pi so the importance ratios stay
    // inside the unclamped region where the surrogate is differentiable.
    GaussianPolicy q = pi;
    {
      RngStream jitter(871 + i, 0);
      std::vector<double> params = q.net.flat_params();
      for (double& v : params) v += 0.05 * jitter.gaussian();
      q.net.set_flat_params(params);
    }
    RolloutBatch batch;
    RngStream rng(971 + i, 0);
    batch.states = Matrix(10, 2);
    for (std::size_t s = 0; s < 10; ++s) {
      batch.states(s, 0) = rng.uniform(0.65, 1.3);
      batch.states(s, 1) = rng.uniform(-0.4, 0.4);
    }
    RngStream alpha_rng = rng.split(10);
    batch.latents = policy_sample(pi, batch.states, alpha_rng);
    batch.rewards.assign(10, 0.0);
    batch.advantages.resize(10);
    for (std::size_t s = 0; s < 10; ++s) batch.advantages[s] = rng.gaussian();
    const double kl_weight = i % 3 == 0 ? 0.0 : (i % 3 == 1 ? 0.7 : 1.3);

    const EstepSurrogate s = estep_surrogate(q, pi, batch, kl_weight);
    if (s.ratio_clamps != 0) {
      ratio_clamped = true;
      continue;
    }
    const auto f = [&](const std::vector<double>& p) {
      GaussianPolicy probe = q;
      probe.net.set_flat_params(p);
      return estep_surrogate(probe, pi, batch, kl_weight).value;
    };
    worst_estep = std::max(
        worst_estep, oracle::max_rel_err(s.grad, oracle::fd_gradient(f, q.net.flat_params())));
  }
  o.note("surrogate_err", worst_estep);
  o.require(!ratio_clamped, "no importance-ratio clamps in the surrogate nets");
  o.require(worst_estep < 1e-4, "policy surrogate gradients match");
  return o;
}

// ---------------------------------------------------------------------------
// 8. Policy training closes the loop: with the analytic inverse-dynamics
//    decoder the mean terminal reward crosses -0.05 within 200 iterations on
//    all three seeds, and with a trained 2-latent decoder the final reward
//    improves on the random-policy start by at least a factor of four on all
//    three seeds.

Outcome criterion8() {
  Outcome o;
  const trajenv::Environment env = trajenv::make_linear_env();

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const GenerativeModel model = inverse_dynamics_model(env);
    EmConfig config;
    config.outer_iterations = 200;
    config.seed = seed;
    RngStream rng(seed, 23);
    const EmResult result = train_em(model, env, config, rng);
    o.require(!result.failed_iteration.has_value(), "analytic run stays finite");
    double best = -1e100;
    for (const auto& row : result.curve) best = std::max(best, row.mean_reward);
    o.note("analytic_best_s" + std::to_string(seed), best);
    o.require(best > -0.05, "analytic decoder crosses -0.05 (seed " + std::to_string(seed) + ")");
  }

  const auto& data = corpus();
  ModelArch arch;
  arch.latent_dim = 2;
  TrainConfig tc;
  tc.epochs = 300;
  tc.seed = 7;
  const VaeTrainResult trained = train_vae(data, arch, tc, 2.5);
  o.require(!trained.failed_epoch.has_value(), "decoder training stays finite");

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    EmConfig config;
    config.outer_iterations = 200;
    config.seed = seed;
    RngStream rng(seed, 13);
    const EmResult result = train_em(trained.model.gen, env, config, rng);
    o.require(!result.failed_iteration.has_value(), "trained-decoder run stays finite");
    const double first = result.curve.front().mean_reward;
    const double last = result.curve.back().mean_reward;
    const double ratio = last == 0.0 ? 1e100 : first / last;
    o.note("ratio_s" + std::to_string(seed), ratio);
    o.require(first < 0.0 && last < 0.0 && last > first,
              "trained-decoder run improves (seed " + std::to_string(seed) + ")");
    o.require(ratio >= 4.0,
              "trained-decoder run improves four-fold (seed " + std::to_string(seed) + ")");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 9. Coverage predicts policy outcome: across a ten-model zoo (trained
//    models of both families plus deliberately crippled decoders), recall
//    against the demo corpus correlates positively with the policy label,
//    with a permutation p-value under 0.05.

Outcome criterion9() {
  Outcome o;
  const trajenv::Environment env = trajenv::make_linear_env();
  const auto& data = corpus();
  const TrajShape shape{env.horizon, env.action_dim};

  struct Entry {
    std::string name;
    GenerativeModel gen;
  };
  std::vector<Entry> zoo;

  const auto add_vae = [&](const std::string& name, std::size_t latent, std::uint64_t seed,
                           double kl_target) {
    ModelArch arch;
    arch.latent_dim = latent;
    TrainConfig tc;
    tc.epochs = 300;
    tc.seed = seed;
    const VaeTrainResult r = train_vae(data, arch, tc, kl_target);
    o.require(!r.failed_epoch.has_value(), name + " trains to completion");
    zoo.push_back({name, r.model.gen});
  };
  const auto train_gan = [&](std::uint64_t seed) {
    ModelArch arch;
    arch.latent_dim = 2;
    TrainConfig tc;
    tc.epochs = 300;
    tc.seed = seed;
    const InfoGanTrainResult r = train_infogan(data, arch, tc, 0.5);
    o.require(!r.failed_epoch.has_value(), "adversarial model trains to completion");
    return r.model.gen;
  };

  add_vae("vae_lat2", 2, 7, 2.5);
  add_vae("vae_lat3", 3, 8, 2.5);
  add_vae("vae_lat6", 6, 12, 2.5);
  add_vae("vae_tight", 2, 13, 0.01);
  const GenerativeModel gan_a = train_gan(9);
  zoo.push_back({"gan_a", gan_a});
  zoo.push_back({"gan_b", train_gan(15)});

  {  // never trained: random decoder on the box prior
    ModelArch arch;
    arch.latent_dim = 2;
    RngStream rng(21, 0);
    GenerativeModel g;
    g.prior = Prior{PriorKind::Uniform, 2};
    g.shape = shape;
    g.decoder = build_decoder(arch, shape, rng);
    zoo.push_back({"untrained", g});
  }
  {  // collapsed onto a single demonstration
    GenerativeModel g;
    g.prior = Prior{PriorKind::Uniform, 2};
    g.shape = shape;
    g.decoder = Mlp({2, shape.flat_dim()}, {Activation::Identity}, {false});
    for (std::size_t c = 0; c < shape.flat_dim(); ++c)
      g.decoder.layers()[0].bias[c] = data.trajectories(0, c);
    zoo.push_back({"constant", g});
  }
  {  // output layer shrunk toward the origin
    GenerativeModel g = gan_a;
    auto& out = g.decoder.layers().back();
    for (std::size_t i = 0; i < out.weight.rows(); ++i) {
      for (std::size_t j = 0; j < out.weight.cols(); ++j) out.weight(i, j) *= 0.25;
      out.bias[i] *= 0.25;
    }
    zoo.push_back({"shrunk", g});
  }
  {  // pushed left out of the goal region
    GenerativeModel g = gan_a;
    auto& out = g.decoder.layers().back();
    for (std::size_t t = 0; t < shape.horizon; ++t) out.bias[t * 2] -= 0.5;
    zoo.push_back({"shifted", g});
  }

  RngStream sub(31, 0);
  const auto order = sub.permutation(data.count());
  const std::vector<std::size_t> pick(order.begin(), order.begin() + 500);
  const Matrix real = numkit::take_rows(data.trajectories, pick);

  std::vector<double> recalls, labels;
  for (const Entry& e : zoo) {
    RngStream srng(33, 0);
    const Matrix samples = e.gen.sample(500, srng);
    recalls.push_back(evalmetrics::precision_recall(real, samples, 10).recall);
  }
  for (const Entry& e : zoo) {
    double label = -1e100;
    for (std::uint64_t seed : {1ull, 2ull}) {
      EmConfig config;
      config.outer_iterations = 100;
      config.seed = seed;
      RngStream rng(seed, 13);
      const EmResult result = train_em(e.gen, env, config, rng);
      o.require(!result.failed_iteration.has_value(), e.name + " policy run stays finite");
      for (const auto& row : result.curve) label = std::max(label, row.mean_reward);
    }
    labels.push_back(label);
  }

  for (std::size_t i = 0; i < zoo.size(); ++i)
    o.note(zoo[i].name, num(recalls[i]) + "/" + num(labels[i]));

  RngStream prng(41, 0);
  const evalmetrics::PearsonResult res = evalmetrics::pearson(recalls, labels, 10000, prng);
  o.note("r", res.r);
  o.note("p", res.p_value);
  o.require(res.r > 0.0, "recall correlates positively with the policy label");
  o.require(res.p_value < 0.05, "permutation p-value under 0.05");
  return o;
}

// ---------------------------------------------------------------------------
// 10. Rerunning the whole pipeline through the command-line binary produces
//     byte-identical artifacts; run manifests are compared structurally with
//     the wall-clock field removed.

Outcome criterion10() {
  namespace fs = std::filesystem;
  Outcome o;
  const char* bin = std::getenv("GENRL_CLI_BIN");
  o.require(bin != nullptr, "GENRL_CLI_BIN points at the binary");
  if (!bin) return o;

  const fs::path base =
      fs::temp_directory_path() / ("genrl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);

  const auto run_cmd = [&](const fs::path& dir, const std::string& rest) {
    const std::string cmd =
        "cd '" + dir.string() + "' && '" + std::string(bin) + "' " + rest + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "command succeeds: " + rest);
  };
  const auto write_cfg = [](const fs::path& path, const json& j) {
    io::write_json(path.string(), j);
  };
  const auto listed = [](const fs::path& dir, const std::string& prefix) {
    std::vector<std::string> names;
    if (!fs::is_directory(dir)) return names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && name.size() > 5 &&
          name.compare(name.size() - 5, 5, ".json") == 0)
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
  };

  for (const char* run : {"a", "b"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir);

    write_cfg(dir / "gen.json", json{{"count", 200}, {"seed", 5}, {"noise_scale", 0.1}});
    run_cmd(dir, "gen-data --config gen.json --out data");

    write_cfg(dir / "train.json",
              json{{"kind", "vae"},
                   {"dataset", "data/dataset.json"},
                   {"seed", 7},
                   {"epochs", 4},
                   {"batch_size", 64},
                   {"arch", json{{"latent_dim", 2},
                                 {"decoder_hidden", json::array({16, 16})},
                                 {"batch_norm", false}}},
                   {"grid", json{{"latent_dims", json::array({2, 3})},
                                 {"kl_targets", json::array({1.0, 2.5})}}}});
    run_cmd(dir, "train-model --config train.json --out models");

    const std::vector<std::string> model_files = listed(dir / "models", "model_");
    o.require(model_files.size() == 4, "grid training wrote four models");

    json model_paths = json::array();
    for (const std::string& f : model_files) model_paths.push_back("models/" + f);
    write_cfg(dir / "eval.json", json{{"models", model_paths},
                                      {"dataset", "data/dataset.json"},
                                      {"seed", 3},
                                      {"pr", json{{"k", 3}, {"samples", 60}}}});
    run_cmd(dir, "eval --config eval.json --metrics pr --out eval");

    json label_paths = json::array();
    for (const std::string& f : model_files) {
      const std::string name = f.substr(6, f.size() - 11);  // model_<name>.json
      write_cfg(dir / ("policy_" + name + ".json"),
                json{{"model", "models/" + f},
                     {"seed", 2},
                     {"runs", 1},
                     {"em", json{{"outer_iterations", 4}, {"batch_size", 32}}}});
      run_cmd(dir, "train-policy --config policy_" + name + ".json --out labels/" + name);
      label_paths.push_back("labels/" + name + "/label.json");
    }

    json report_paths = json::array();
    for (const std::string& f : listed(dir / "eval", "report_"))
      report_paths.push_back("eval/" + f);
    write_cfg(dir / "corr.json", json{{"reports", report_paths},
                                      {"labels", label_paths},
                                      {"permutations", 200},
                                      {"seed", 9}});
    run_cmd(dir, "correlate --config corr.json --out corr");

    // Semantic artifacts only: a manifest input would smuggle its wall
    // clock into the report manifest through the recorded input hash.
    json inputs = json::array();
    inputs.push_back("data/dataset.json");
    for (const auto& p : model_paths) inputs.push_back(p);
    for (const auto& p : report_paths) inputs.push_back(p);
    for (const auto& p : label_paths) inputs.push_back(p);
    inputs.push_back("corr/correlation.json");
    write_cfg(dir / "rep.json", json{{"inputs", inputs}});
    run_cmd(dir, "report --config rep.json --out rep");
  }

  if (!o.ok) {
    o.note("kept", base.string());
    return o;
  }

  std::size_t files = 0, manifests = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), base / "a");
    const fs::path twin = base / "b" / rel;
    if (!fs::exists(twin)) {
      o.require(false, "missing counterpart for " + rel.string());
      continue;
    }
    ++files;
    if (entry.path().filename() == "manifest.json") {
      ++manifests;
      json ma = io::load_json(entry.path().string());
      json mb = io::load_json(twin.string());
      ma.erase("wall_clock_seconds");
      mb.erase("wall_clock_seconds");
      o.require(ma == mb, "manifests agree structurally: " + rel.string());
    } else {
      o.require(io::read_text(entry.path().string()) == io::read_text(twin.string()),
                "files agree bytewise: " + rel.string());
    }
  }
  o.note("files", static_cast<double>(files));
  o.note("manifests", static_cast<double>(manifests));
  o.require(files >= 30, "the pipeline produced a full artifact tree");
  // One manifest per command: gen-data, train-model, eval, four policy
  // runs, correlate, report.
  o.require(manifests == 9, "every command left a manifest");

  if (o.ok) fs::remove_all(base);
  else o.note("kept", base.string());
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*fn)();
  double budget_s;  // zero means no stated runtime bound
};

const Criterion kCriteria[] = {
    {1, "unbiased mmd matches a naive reference", criterion1, 5.0},
    {2, "permutation test holds its significance level", criterion2, 120.0},
    {3, "precision and recall score worked fixtures exactly", criterion3, 0.0},
    {4, "local linearity separates affine from curved decoders", criterion4, 30.0},
    {5, "intervention disentanglement scores known decoders", criterion5, 180.0},
    {6, "trajectory disentanglement scores known decoders", criterion6, 0.0},
    {7, "loss gradients match finite differences", criterion7, 60.0},
    {8, "policy training reaches and improves rewards", criterion8, 600.0},
    {9, "recall ranks models the way policy training does", criterion9, 1800.0},
    {10, "pipeline reruns are byte-identical", criterion10, 0.0},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  bool all_ok = true;
  for (const Criterion& c : kCriteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.notes += std::string(" exception=") + e.what();
    }
    const double el = elapsed_s(t0);
    if (c.budget_s > 0.0 && el > c.budget_s) {
      o.ok = false;
      o.notes += " FAILED[runtime over " + num(c.budget_s) + "s]";
    }
    all_ok = all_ok && o.ok;
    std::printf("[%s] criterion %2d: %s (%.1fs)%s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, el,
                o.notes.c_str());
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
