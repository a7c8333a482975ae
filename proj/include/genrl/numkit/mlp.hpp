#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "genrl/numkit/matrix.hpp"
#include "genrl/numkit/rng.hpp"

namespace genrl::numkit {

enum class Activation { Identity, ReLU, Tanh, Sigmoid };

// Train mode normalizes with batch statistics; Eval mode with running
// statistics. Forward never mutates the network: the training loop folds
// batch statistics into the running ones via absorb_batch_stats.
enum class Mode { Train, Eval };

struct BatchNorm {
  std::vector<double> gamma;         // learned scale
  std::vector<double> beta;          // learned shift
  std::vector<double> running_mean;  // eval-time statistics
  std::vector<double> running_var;
  double momentum = 0.9;  // running <- momentum * running + (1 - momentum) * batch
  double eps = 1e-5;
};

struct Layer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  Activation act = Activation::Identity;
  std::optional<BatchNorm> bn;  // applied between the affine map and act
};

struct LayerCache {
  Matrix input;    // batch fed to this layer
  Matrix pre_act;  // affine output, batch-normalized when bn is present
  Matrix normed;   // (x - mean) / sqrt(var + eps), bn layers only
  std::vector<double> batch_mean, batch_var;  // bn + Train mode only
  Matrix output;   // after activation
};

struct ForwardCache {
  Mode mode = Mode::Train;
  std::vector<LayerCache> layers;
};

struct MlpGradients {
  std::vector<double> params;  // same layout as Mlp::flat_params
  Matrix input;                // dL/d(input batch)
};

// Fully connected net evaluated on row batches. Parameters flatten per
// layer as [weight row-major, bias, gamma, beta]; running statistics are
// state, not parameters, and are excluded from the flat vector.
class Mlp {
 public:
  Mlp() = default;

  // dims = {in, h1, ..., out}; acts and use_bn each have dims.size()-1 entries.
  Mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
      const std::vector<bool>& use_bn);

  // He-scaled Gaussian weights for ReLU layers, Xavier otherwise; zero biases.
  static Mlp init_random(const std::vector<std::size_t>& dims,
                         const std::vector<Activation>& acts,
                         const std::vector<bool>& use_bn, RngStream& rng);

  bool empty() const { return layers_.empty(); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Matrix forward(const Matrix& input, Mode mode) const;
  Matrix forward(const Matrix& input, Mode mode, ForwardCache& cache) const;

  // upstream is dL/d(output) for the batch recorded in cache. Train-mode
  // caches differentiate through the batch statistics.
  MlpGradients backward(const ForwardCache& cache, const Matrix& upstream) const;

  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& params);

  void absorb_batch_stats(const ForwardCache& cache);

 private:
  std::vector<Layer> layers_;
};

double activate(Activation act, double x);

}  // namespace genrl::numkit
