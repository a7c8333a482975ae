#include "genrl/empolicy/em.hpp"

#include <algorithm>
#include <cmath>

#include "genrl/error.hpp"
#include "genrl/numkit/adam.hpp"
#include "genrl/numkit/clamp.hpp"

namespace genrl::empolicy {
namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

bool all_finite(const std::vector<double>& values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double> gather(const std::vector<double>& values,
                           const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = values[idx[i]];
  return out;
}

RolloutBatch take_batch(const RolloutBatch& batch, const std::vector<std::size_t>& idx) {
  RolloutBatch out;
  out.states = numkit::take_rows(batch.states, idx);
  out.latents = numkit::take_rows(batch.latents, idx);
  out.rewards = gather(batch.rewards, idx);
  out.advantages = gather(batch.advantages, idx);
  return out;
}

double batch_mse(const Mlp& value, const Matrix& states, const std::vector<double>& rewards) {
  const Matrix v = value.forward(states, numkit::Mode::Eval);
  double acc = 0.0;
  for (std::size_t i = 0; i < states.rows(); ++i) {
    const double d = v(i, 0) - rewards[i];
    acc += d * d;
  }
  return acc / static_cast<double>(states.rows());
}

}  // namespace

EstepSurrogate estep_surrogate(const GaussianPolicy& q, const GaussianPolicy& pi,
                               const RolloutBatch& batch, double kl_weight) {
  require(q.latent_dim == pi.latent_dim, "estep_surrogate: latent dims differ");
  require(kl_weight >= 0.0, "estep_surrogate: kl_weight must be nonnegative");
  const std::size_t n = batch.states.rows();
  require(n > 0, "estep_surrogate: empty batch");
  require(batch.advantages.size() == n, "estep_surrogate: one advantage per state");
  const std::size_t latent = q.latent_dim;

  numkit::ForwardCache cache(numkit::Mode::Eval);
  const Matrix q_out = q.net.forward(batch.states, numkit::Mode::Eval, cache);
  const PolicyHeads hp = policy_heads(pi, batch.states);

  EstepSurrogate result;
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix upstream(n, 2 * latent);
  double total = 0.0;
  double kl_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double log_q = 0.0, log_pi = 0.0, kl = 0.0;
    for (std::size_t j = 0; j < latent; ++j) {
      const double mu_q = q_out(i, j);
      const double ls_q =
          numkit::clamp_value(q_out(i, latent + j), kLogSigmaMin, kLogSigmaMax);
      const double ls_p = hp.log_sigma(i, j);
      const double sd_q = std::exp(ls_q);
      const double dq = (batch.latents(i, j) - mu_q) / sd_q;
      const double dp = (batch.latents(i, j) - hp.mu(i, j)) / std::exp(ls_p);
      log_q += -kHalfLog2Pi - ls_q - 0.5 * dq * dq;
      log_pi += -kHalfLog2Pi - ls_p - 0.5 * dp * dp;
      const double vr = std::exp(2.0 * (ls_q - ls_p));
      const double dm = mu_q - hp.mu(i, j);
      kl += ls_p - ls_q + 0.5 * vr + dm * dm / (2.0 * std::exp(2.0 * ls_p)) - 0.5;
    }
    const double log_ratio = log_q - log_pi;
    const double clamped =
        numkit::clamp_value(log_ratio, -kLogRatioClamp, kLogRatioClamp);
    const double ratio_gate = numkit::clamp_mask(log_ratio, -kLogRatioClamp, kLogRatioClamp);
    if (ratio_gate == 0.0) ++result.ratio_clamps;
    const double w = std::exp(clamped);
    const double a = batch.advantages[i];
    total += w * a - kl_weight * kl;
    kl_total += kl;

    for (std::size_t j = 0; j < latent; ++j) {
      const double mu_q = q_out(i, j);
      const double raw_ls = q_out(i, latent + j);
      const double ls_q = numkit::clamp_value(raw_ls, kLogSigmaMin, kLogSigmaMax);
      const double mask = numkit::clamp_mask(raw_ls, kLogSigmaMin, kLogSigmaMax);
      const double var_q = std::exp(2.0 * ls_q);
      const double var_p = std::exp(2.0 * hp.log_sigma(i, j));
      const double diff = batch.latents(i, j) - mu_q;
      const double dm = mu_q - hp.mu(i, j);
      const double dlogq_dmu = diff / var_q;
      const double dlogq_dls = diff * diff / var_q - 1.0;
      const double dkl_dmu = dm / var_p;
      const double dkl_dls = var_q / var_p - 1.0;
      upstream(i, j) = (ratio_gate * a * w * dlogq_dmu - kl_weight * dkl_dmu) * inv_n;
      upstream(i, latent + j) =
          mask * (ratio_gate * a * w * dlogq_dls - kl_weight * dkl_dls) * inv_n;
    }
  }
  result.value = total * inv_n;
  result.mean_kl = kl_total * inv_n;
  result.grad = q.net.backward(cache, upstream).params;
  return result;
}

InnerFitResult estep_update(GaussianPolicy& q, const GaussianPolicy& pi,
                            const RolloutBatch& batch, const EmConfig& config,
                            RngStream& rng) {
  const std::size_t n = batch.states.rows();
  numkit::AdamState adam(q.net.param_count(), config.policy_lr);

  InnerFitResult fit;
  fit.initial = estep_surrogate(q, pi, batch, config.kl_weight).value;
  double best = fit.initial;
  std::vector<double> best_params = q.net.flat_params();

  std::vector<double> neg(q.net.param_count());
  for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
    RngStream erng = rng.split(epoch);
    const std::vector<std::size_t> perm = erng.permutation(n);
    for (std::size_t start = 0; start < n; start += kInnerMinibatch) {
      const std::size_t stop = std::min(n, start + kInnerMinibatch);
      const std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
      const RolloutBatch mini = take_batch(batch, idx);
      const EstepSurrogate s = estep_surrogate(q, pi, mini, config.kl_weight);
      for (std::size_t p = 0; p < neg.size(); ++p) neg[p] = -s.grad[p];
      std::vector<double> params = q.net.flat_params();
      numkit::adam_step(adam, params, neg);
      q.net.set_flat_params(params);
    }
    const double score = estep_surrogate(q, pi, batch, config.kl_weight).value;
    if (score > best) {
      best = score;
      best_params = q.net.flat_params();
    }
  }

  const double last = estep_surrogate(q, pi, batch, config.kl_weight).value;
  if (last < best) {
    q.net.set_flat_params(best_params);
    fit.reverted = true;
  }
  fit.final_value = best;
  return fit;
}

void mstep_copy(const GaussianPolicy& q, GaussianPolicy& pi) {
  require(q.latent_dim == pi.latent_dim, "mstep_copy: latent dims differ");
  require(q.net.param_count() == pi.net.param_count(), "mstep_copy: architectures differ");
  pi.net.set_flat_params(q.net.flat_params());
}

InnerFitResult value_fit(Mlp& value, const Matrix& states, const std::vector<double>& rewards,
                         const EmConfig& config, RngStream& rng) {
  const std::size_t n = states.rows();
  require(n > 0, "value_fit: empty batch");
  require(rewards.size() == n, "value_fit: one reward per state");
  numkit::AdamState adam(value.param_count(), config.value_lr);

  InnerFitResult fit;
  fit.initial = batch_mse(value, states, rewards);
  double best = fit.initial;
  std::vector<double> best_params = value.flat_params();

  for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
    RngStream erng = rng.split(epoch);
    const std::vector<std::size_t> perm = erng.permutation(n);
    for (std::size_t start = 0; start < n; start += kInnerMinibatch) {
      const std::size_t stop = std::min(n, start + kInnerMinibatch);
      const std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
      const Matrix mb_states = numkit::take_rows(states, idx);
      const std::vector<double> mb_rewards = gather(rewards, idx);

      numkit::ForwardCache cache(numkit::Mode::Eval);
      const Matrix v = value.forward(mb_states, numkit::Mode::Eval, cache);
      Matrix upstream(idx.size(), 1);
      for (std::size_t i = 0; i < idx.size(); ++i)
        upstream(i, 0) = 2.0 * (v(i, 0) - mb_rewards[i]) / static_cast<double>(idx.size());
      const std::vector<double> grads = value.backward(cache, upstream).params;
      std::vector<double> params = value.flat_params();
      numkit::adam_step(adam, params, grads);
      value.set_flat_params(params);
    }
    const double score = batch_mse(value, states, rewards);
    if (score < best) {
      best = score;
      best_params = value.flat_params();
    }
  }

  const double last = batch_mse(value, states, rewards);
  if (last > best) {
    value.set_flat_params(best_params);
    fit.reverted = true;
  }
  fit.final_value = best;
  return fit;
}

EmResult train_em(const GenerativeModel& model, const trajenv::Environment& env,
                  const EmConfig& config, RngStream& rng) {
  model.validate();
  require(config.batch_size > 0, "train_em: batch_size must be positive");
  require(config.kl_weight >= 0.0, "train_em: kl_weight must be nonnegative");
  require(model.shape.flat_dim() == env.traj_dim(),
          "train_em: model trajectories must fit the environment");
  const std::size_t n = config.batch_size;
  const std::size_t latent = model.prior.dim;

  EmResult result;
  RngStream policy_rng = rng.split(1);
  RngStream value_rng = rng.split(2);
  result.policy = make_policy(latent, policy_rng);
  result.value = make_value_net(value_rng);

  for (std::size_t t = 0; t < config.outer_iterations; ++t) {
    RngStream iter = rng.split(1000 + t);

    RolloutBatch batch;
    batch.states = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      RngStream srng = iter.split(i);
      batch.states.set_row(i, sample_goal(env, srng));
    }

    RngStream alpha_rng = iter.split(n);
    batch.latents = policy_sample(result.policy, batch.states, alpha_rng);

    // Decode only in-support latents; the density bookkeeping keeps the
    // raw draws.
    Matrix decoded_latents = batch.latents;
    std::size_t clamped = 0;
    if (model.prior.bounded()) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < latent; ++j) {
          const double raw = decoded_latents(i, j);
          const double cut = numkit::clamp_value(raw, -1.0, 1.0);
          if (cut != raw) ++clamped;
          decoded_latents(i, j) = cut;
        }
    }
    batch.trajectories = model.decode(decoded_latents);

    batch.rewards.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      batch.rewards[i] =
          trajenv::terminal_reward(env, batch.states.row(i), batch.trajectories.row(i));
    if (!all_finite(batch.rewards)) {
      result.failed_iteration = t;
      break;
    }

    RngStream vrng = iter.split(n + 1);
    const InnerFitResult vfit = value_fit(result.value, batch.states, batch.rewards,
                                          config, vrng);
    if (vfit.reverted) ++result.value_reverts;

    const Matrix values = result.value.forward(batch.states, numkit::Mode::Eval);
    batch.advantages.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      batch.advantages[i] = batch.rewards[i] - values(i, 0);
    if (config.normalize_advantages) {
      double mean = 0.0;
      for (double a : batch.advantages) mean += a;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double a : batch.advantages) var += (a - mean) * (a - mean);
      const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
      for (double& a : batch.advantages) a = (a - mean) / sd;
    }

    GaussianPolicy q = result.policy;
    RngStream qrng = iter.split(n + 2);
    const InnerFitResult efit = estep_update(q, result.policy, batch, config, qrng);
    if (efit.reverted) ++result.estep_reverts;
    if (!all_finite(q.net.flat_params())) {
      result.failed_iteration = t;
      break;
    }

    double kl_sum = 0.0;
    for (double kl : policy_kl(q, result.policy, batch.states)) kl_sum += kl;

    mstep_copy(q, result.policy);

    EmCurveRow row;
    row.iteration = t;
    double mean = 0.0;
    for (double r : batch.rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : batch.rewards) var += (r - mean) * (r - mean);
    row.mean_reward = mean;
    row.std_reward = std::sqrt(var / static_cast<double>(n));
    row.mean_kl = kl_sum / static_cast<double>(n);
    row.clamp_fraction =
        static_cast<double>(clamped) / static_cast<double>(n * latent);
    result.curve.push_back(row);
  }
  return result;
}

}  // namespace genrl::empolicy
