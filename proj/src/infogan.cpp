#include "genrl/genmodels/infogan.hpp"

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

constexpr double kLogSigLo = -6.0;
constexpr double kLogSigHi = 3.0;

void InfoGanModel::validate() const {
  gen.validate();
  require(gen.prior.kind == PriorKind::Uniform, "InfoGanModel: prior must be uniform");
  require(trunk.in_dim() == gen.shape.flat_dim(), "InfoGanModel: trunk input width mismatch");
  require(disc_head.in_dim() == trunk.out_dim(), "InfoGanModel: disc head width mismatch");
  require(disc_head.out_dim() == 1, "InfoGanModel: disc head must emit one logit");
  require(q_head.in_dim() == trunk.out_dim(), "InfoGanModel: q head width mismatch");
  require(q_head.out_dim() == 2 * gen.prior.dim, "InfoGanModel: q head must emit mu and log sigma");
}

std::vector<double> InfoGanModel::discriminate(const Matrix& batch) const {
  const Matrix features = trunk.forward(batch, Mode::Eval);
  const Matrix logits = disc_head.forward(features, Mode::Eval);
  std::vector<double> probs(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i)
    probs[i] = clamp_value(numkit::activate(numkit::Activation::Sigmoid, logits(i, 0)),
                           kDiscClampEps, 1.0 - kDiscClampEps);
  return probs;
}

namespace {

struct ProbTerms {
  std::vector<double> p;      // clamped probability per sample
  std::size_t clamped = 0;
};

ProbTerms clamped_probs(const Matrix& logits) {
  ProbTerms out;
  out.p.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double raw = numkit::activate(numkit::Activation::Sigmoid, logits(i, 0));
    const double p = clamp_value(raw, kDiscClampEps, 1.0 - kDiscClampEps);
    if (p != raw) ++out.clamped;
    out.p[i] = p;
  }
  return out;
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v) {
  if (acc.empty()) acc.assign(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

}  // namespace

InfoGanBatchResult infogan_losses(const InfoGanModel& model, const Matrix& real_batch,
                                  const Matrix& latent_batch, Mode gen_mode,
                                  bool compute_d, bool compute_g) {
  const std::size_t n_real = real_batch.rows();
  const std::size_t n_fake = latent_batch.rows();
  require(n_real >= 1 && n_fake >= 1, "infogan_losses: empty batch");
  require(real_batch.cols() == model.gen.shape.flat_dim(),
          "infogan_losses: real batch width mismatch");
  require(latent_batch.cols() == model.gen.prior.dim,
          "infogan_losses: latent width mismatch");

  InfoGanBatchResult out;

  const Matrix fake = model.gen.decoder.forward(latent_batch, gen_mode, out.gen_cache);

  ForwardCache trunk_real_cache, trunk_fake_cache;
  const Matrix feat_real = model.trunk.forward(real_batch, Mode::Eval, trunk_real_cache);
  const Matrix feat_fake = model.trunk.forward(fake, Mode::Eval, trunk_fake_cache);

  ForwardCache head_real_cache, head_fake_cache;
  const Matrix logit_real = model.disc_head.forward(feat_real, Mode::Eval, head_real_cache);
  const Matrix logit_fake = model.disc_head.forward(feat_fake, Mode::Eval, head_fake_cache);

  const ProbTerms preal = clamped_probs(logit_real);
  const ProbTerms pfake = clamped_probs(logit_fake);
  out.loss.clamp_events = preal.clamped + pfake.clamped;

  const double inv_nr = 1.0 / static_cast<double>(n_real);
  const double inv_n = 1.0 / static_cast<double>(n_fake);
  double d_loss = 0.0, g_loss = 0.0;
  for (std::size_t i = 0; i < n_real; ++i) d_loss -= std::log(preal.p[i]) * inv_nr;
  for (std::size_t i = 0; i < n_fake; ++i) d_loss -= std::log(1.0 - pfake.p[i]) * inv_n;
  for (std::size_t i = 0; i < n_fake; ++i) g_loss -= std::log(pfake.p[i]) * inv_n;
  out.loss.d_loss = d_loss;
  out.loss.g_loss = g_loss;

  // Latent reconstruction head on the generated features.
  ForwardCache q_cache;
  const Matrix q_out = model.q_head.forward(feat_fake, Mode::Eval, q_cache);
  const std::size_t latent = model.gen.prior.dim;
  constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2 pi)
  double info = 0.0;
  Matrix q_upstream(n_fake, 2 * latent);
  for (std::size_t i = 0; i < n_fake; ++i) {
    for (std::size_t j = 0; j < latent; ++j) {
      const double mu = q_out(i, j);
      const double raw_ls = q_out(i, latent + j);
      const double ls = clamp_value(raw_ls, kLogSigLo, kLogSigHi);
      const double m = clamp_mask(raw_ls, kLogSigLo, kLogSigHi);
      const double diff = latent_batch(i, j) - mu;
      const double inv_var = std::exp(-2.0 * ls);
      info += kHalfLog2Pi + ls + 0.5 * diff * diff * inv_var;
      q_upstream(i, j) = -diff * inv_var * inv_n;
      q_upstream(i, latent + j) = m * (1.0 - diff * diff * inv_var) * inv_n;
    }
  }
  out.loss.info_loss = info * inv_n;

  if (compute_d) {
    // d_loss: -(1-p)/n on real logits, +p/n on fake logits; clamped
    // samples contribute constants, hence zero gradient.
    Matrix up_real(n_real, 1), up_fake(n_fake, 1);
    for (std::size_t i = 0; i < n_real; ++i) {
      const bool active = preal.p[i] > kDiscClampEps && preal.p[i] < 1.0 - kDiscClampEps;
      up_real(i, 0) = active ? -(1.0 - preal.p[i]) * inv_nr : 0.0;
    }
    for (std::size_t i = 0; i < n_fake; ++i) {
      const bool active = pfake.p[i] > kDiscClampEps && pfake.p[i] < 1.0 - kDiscClampEps;
      up_fake(i, 0) = active ? pfake.p[i] * inv_n : 0.0;
    }
    const auto head_real = model.disc_head.backward(head_real_cache, up_real);
    const auto head_fake = model.disc_head.backward(head_fake_cache, up_fake);
    add_scaled(out.dloss_disc_head, head_real.params);
    add_scaled(out.dloss_disc_head, head_fake.params);
    const auto trunk_real = model.trunk.backward(trunk_real_cache, head_real.input);
    const auto trunk_fake = model.trunk.backward(trunk_fake_cache, head_fake.input);
    add_scaled(out.dloss_trunk, trunk_real.params);
    add_scaled(out.dloss_trunk, trunk_fake.params);
  }

  if (compute_g) {
    // g_loss into the generator through the frozen trunk and head.
    Matrix up_fake(n_fake, 1);
    for (std::size_t i = 0; i < n_fake; ++i) {
      const bool active = pfake.p[i] > kDiscClampEps && pfake.p[i] < 1.0 - kDiscClampEps;
      up_fake(i, 0) = active ? -(1.0 - pfake.p[i]) * inv_n : 0.0;
    }
    const auto head_g = model.disc_head.backward(head_fake_cache, up_fake);
    const auto trunk_g = model.trunk.backward(trunk_fake_cache, head_g.input);
    out.gloss_gen = model.gen.decoder.backward(out.gen_cache, trunk_g.input).params;

    // info_loss into q head, trunk, and generator.
    const auto q_grads = model.q_head.backward(q_cache, q_upstream);
    out.info_q = q_grads.params;
    const auto trunk_i = model.trunk.backward(trunk_fake_cache, q_grads.input);
    out.info_trunk = trunk_i.params;
    out.info_gen = model.gen.decoder.backward(out.gen_cache, trunk_i.input).params;
  }

  return out;
}

InfoGanTrainResult train_infogan(const trajenv::TrajectoryDataset& data, const ModelArch& arch,
                                 const TrainConfig& config, double lambda) {
  require(data.count() >= 2, "train_infogan: need at least two trajectories");
  require(config.batch_size >= 2, "train_infogan: batch size must be at least 2");
  require(lambda >= 0.0, "train_infogan: lambda must be nonnegative");

  RngStream root(config.seed, 19);
  RngStream gen_rng = root.split(1);
  RngStream trunk_rng = root.split(2);
  RngStream dhead_rng = root.split(3);
  RngStream qhead_rng = root.split(4);

  const TrajShape shape{data.horizon, data.action_dim};
  InfoGanTrainResult result;
  InfoGanModel& model = result.model;
  model.gen.decoder = build_decoder(arch, shape, gen_rng);
  model.gen.prior = Prior{PriorKind::Uniform, arch.latent_dim};
  model.gen.shape = shape;
  model.trunk = build_trunk(arch, shape, trunk_rng);
  model.disc_head = build_disc_head(arch, dhead_rng);
  model.q_head = build_q_head(arch, qhead_rng);
  model.lambda = lambda;
  model.validate();

  // Lower first-moment decay keeps the adversarial game stable.
  auto make_state = [&](std::size_t dim) {
    AdamState s(dim, config.learning_rate);
    s.beta1 = 0.5;
    return s;
  };
  AdamState gen_state = make_state(model.gen.decoder.param_count());
  AdamState trunk_state = make_state(model.trunk.param_count());
  AdamState dhead_state = make_state(model.disc_head.param_count());
  AdamState qhead_state = make_state(model.q_head.param_count());

  auto apply = [](AdamState& state, numkit::Mlp& net, const std::vector<double>& grads) {
    auto params = net.flat_params();
    adam_step(state, params, grads);
    net.set_flat_params(params);
  };

  InfoGanModel checkpoint = model;
  const std::size_t n = data.count();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream erng = root.split(1000 + epoch);
    const auto order = erng.permutation(n);
    double sum_d = 0.0, sum_g = 0.0, sum_info = 0.0;
    std::size_t seen = 0;
    try {
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t count = std::min(config.batch_size, n - start);
        if (count < 2) continue;
        std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + count);
        const Matrix real = numkit::take_rows(data.trajectories, idx);
        RngStream brng = erng.split(start);

        // Discriminator step.
        const Matrix latents_d = model.gen.prior.sample(count, brng);
        auto rd = infogan_losses(model, real, latents_d, Mode::Train,
                                 /*compute_d=*/true, /*compute_g=*/false);
        apply(trunk_state, model.trunk, rd.dloss_trunk);
        apply(dhead_state, model.disc_head, rd.dloss_disc_head);

        // Generator step on fresh latents.
        const Matrix latents_g = model.gen.prior.sample(count, brng);
        auto rg = infogan_losses(model, real, latents_g, Mode::Train,
                                 /*compute_d=*/false, /*compute_g=*/true);
        if (!std::isfinite(rg.loss.d_loss) || !std::isfinite(rg.loss.g_loss) ||
            !std::isfinite(rg.loss.info_loss)) {
          std::ostringstream msg;
          msg << "train_infogan: non-finite loss at epoch " << epoch << " batch " << start;
          throw NumericError(msg.str());
        }
        std::vector<double> gen_grads = rg.gloss_gen;
        if (lambda > 0.0) {
          for (std::size_t i = 0; i < gen_grads.size(); ++i)
            gen_grads[i] += lambda * rg.info_gen[i];
          std::vector<double> q_grads(rg.info_q.size());
          for (std::size_t i = 0; i < q_grads.size(); ++i) q_grads[i] = lambda * rg.info_q[i];
          apply(qhead_state, model.q_head, q_grads);
        }
        apply(gen_state, model.gen.decoder, gen_grads);
        model.gen.decoder.absorb_batch_stats(rg.gen_cache);

        result.clamp_events += rd.loss.clamp_events + rg.loss.clamp_events;
        sum_d += rd.loss.d_loss * static_cast<double>(count);
        sum_g += rg.loss.g_loss * static_cast<double>(count);
        sum_info += rg.loss.info_loss * static_cast<double>(count);
        seen += count;
      }
    } catch (const NumericError&) {
      model = checkpoint;
      result.failed_epoch = epoch;
      break;
    }
    result.log.push_back({epoch, sum_d / static_cast<double>(seen),
                          sum_g / static_cast<double>(seen),
                          sum_info / static_cast<double>(seen)});
    checkpoint = model;
  }
  return result;
}

}  // namespace genrl::genmodels
