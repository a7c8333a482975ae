#include "genrl/numkit/mlp.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::numkit {
namespace {

Matrix affine_forward(const Matrix& x, const Layer& layer) {
  const std::size_t n = x.rows();
  const std::size_t out = layer.weight.rows();
  const std::size_t in = layer.weight.cols();
  Matrix z(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < in; ++k) acc += w[k] * xi[k];
      z(i, o) = acc;
    }
  }
  return z;
}

double activation_grad(Activation act, double pre, double post) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Sigmoid: return post * (1.0 - post);
  }
  return 0.0;
}

}  // namespace

double activate(Activation act, double x) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

Mlp::Mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
         const std::vector<bool>& use_bn) {
  require(dims.size() >= 2, "Mlp: need at least one layer");
  require(acts.size() == dims.size() - 1, "Mlp: one activation per layer");
  require(use_bn.size() == dims.size() - 1, "Mlp: one batch-norm flag per layer");
  layers_.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layers_[l].weight = Matrix(dims[l + 1], dims[l]);
    layers_[l].bias.assign(dims[l + 1], 0.0);
    layers_[l].act = acts[l];
    if (use_bn[l]) {
      BatchNorm bn;
      bn.gamma.assign(dims[l + 1], 1.0);
      bn.beta.assign(dims[l + 1], 0.0);
      bn.running_mean.assign(dims[l + 1], 0.0);
      bn.running_var.assign(dims[l + 1], 1.0);
      layers_[l].bn = bn;
    }
  }
}

Mlp Mlp::init_random(const std::vector<std::size_t>& dims,
                     const std::vector<Activation>& acts,
                     const std::vector<bool>& use_bn, RngStream& rng) {
  Mlp net(dims, acts, use_bn);
  for (auto& layer : net.layers_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double scale = layer.act == Activation::ReLU ? std::sqrt(2.0 / fan_in)
                                                       : std::sqrt(1.0 / fan_in);
    for (std::size_t o = 0; o < layer.weight.rows(); ++o)
      for (std::size_t k = 0; k < layer.weight.cols(); ++k)
        layer.weight(o, k) = scale * rng.gaussian();
  }
  return net;
}

std::size_t Mlp::in_dim() const {
  require(!layers_.empty(), "Mlp: empty network");
  return layers_.front().weight.cols();
}

std::size_t Mlp::out_dim() const {
  require(!layers_.empty(), "Mlp: empty network");
  return layers_.back().weight.rows();
}

Matrix Mlp::forward(const Matrix& input, Mode mode) const {
  ForwardCache cache;
  return forward(input, mode, cache);
}

Matrix Mlp::forward(const Matrix& input, Mode mode, ForwardCache& cache) const {
  require(!layers_.empty(), "Mlp: empty network");
  require(input.cols() == in_dim(), "Mlp::forward: input width mismatch");
  cache.mode = mode;
  cache.layers.assign(layers_.size(), LayerCache{});
  Matrix x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    LayerCache& lc = cache.layers[l];
    lc.input = x;
    Matrix z = affine_forward(x, layer);
    if (layer.bn) {
      const BatchNorm& bn = *layer.bn;
      const std::size_t n = z.rows();
      const std::size_t w = z.cols();
      lc.normed = Matrix(n, w);
      if (mode == Mode::Train) {
        lc.batch_mean.assign(w, 0.0);
        lc.batch_var.assign(w, 0.0);
        for (std::size_t j = 0; j < w; ++j) {
          double m = 0.0;
          for (std::size_t i = 0; i < n; ++i) m += z(i, j);
          m /= static_cast<double>(n);
          double v = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double d = z(i, j) - m;
            v += d * d;
          }
          v /= static_cast<double>(n);
          lc.batch_mean[j] = m;
          lc.batch_var[j] = v;
          const double inv = 1.0 / std::sqrt(v + bn.eps);
          for (std::size_t i = 0; i < n; ++i) {
            lc.normed(i, j) = (z(i, j) - m) * inv;
            z(i, j) = bn.gamma[j] * lc.normed(i, j) + bn.beta[j];
          }
        }
      } else {
        for (std::size_t j = 0; j < w; ++j) {
          const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.eps);
          for (std::size_t i = 0; i < n; ++i) {
            lc.normed(i, j) = (z(i, j) - bn.running_mean[j]) * inv;
            z(i, j) = bn.gamma[j] * lc.normed(i, j) + bn.beta[j];
          }
        }
      }
    }
    lc.pre_act = z;
    Matrix a(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) a(i, j) = activate(layer.act, z(i, j));
    lc.output = a;
    x = std::move(a);
  }
  return x;
}

MlpGradients Mlp::backward(const ForwardCache& cache, const Matrix& upstream) const {
  require(cache.layers.size() == layers_.size(), "Mlp::backward: cache mismatch");
  MlpGradients grads;
  grads.params.assign(param_count(), 0.0);

  // Parameter offsets mirror flat_params layout.
  std::vector<std::size_t> offsets(layers_.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = off;
    off += layers_[l].weight.size() + layers_[l].bias.size();
    if (layers_[l].bn) off += 2 * layers_[l].bn->gamma.size();
  }

  Matrix grad = upstream;
  for (std::size_t li = layers_.size(); li > 0; --li) {
    const std::size_t l = li - 1;
    const Layer& layer = layers_[l];
    const LayerCache& lc = cache.layers[l];
    const std::size_t n = lc.output.rows();
    const std::size_t w = lc.output.cols();
    require(grad.rows() == n && grad.cols() == w, "Mlp::backward: upstream shape mismatch");

    // Through the activation.
    Matrix dz(n, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j)
        dz(i, j) = grad(i, j) * activation_grad(layer.act, lc.pre_act(i, j), lc.output(i, j));

    double* pgrad = grads.params.data() + offsets[l];
    double* wgrad = pgrad;
    double* bgrad = pgrad + layer.weight.size();

    // Through batch norm (if present).
    if (layer.bn) {
      const BatchNorm& bn = *layer.bn;
      double* ggrad = bgrad + layer.bias.size();
      double* sgrad = ggrad + bn.gamma.size();
      Matrix dpre(n, w);
      if (cache.mode == Mode::Train) {
        for (std::size_t j = 0; j < w; ++j) {
          const double inv = 1.0 / std::sqrt(lc.batch_var[j] + bn.eps);
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0, dg = 0.0, db = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dxhat = dz(i, j) * bn.gamma[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * lc.normed(i, j);
            dg += dz(i, j) * lc.normed(i, j);
            db += dz(i, j);
          }
          const double mean_dxhat = sum_dxhat / static_cast<double>(n);
          const double mean_dxhat_xhat = sum_dxhat_xhat / static_cast<double>(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double dxhat = dz(i, j) * bn.gamma[j];
            dpre(i, j) = inv * (dxhat - mean_dxhat - lc.normed(i, j) * mean_dxhat_xhat);
          }
          ggrad[j] = dg;
          sgrad[j] = db;
        }
      } else {
        for (std::size_t j = 0; j < w; ++j) {
          const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.eps);
          double dg = 0.0, db = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            dpre(i, j) = dz(i, j) * bn.gamma[j] * inv;
            dg += dz(i, j) * lc.normed(i, j);
            db += dz(i, j);
          }
          ggrad[j] = dg;
          sgrad[j] = db;
        }
      }
      dz = std::move(dpre);
    }

    // Through the affine map.
    const std::size_t in = layer.weight.cols();
    for (std::size_t o = 0; o < w; ++o) {
      double db = 0.0;
      for (std::size_t i = 0; i < n; ++i) db += dz(i, o);
      bgrad[o] = db;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = lc.input.row(i);
      const double* dzi = dz.row(i);
      for (std::size_t o = 0; o < w; ++o) {
        const double g = dzi[o];
        if (g == 0.0) continue;
        double* wrow = wgrad + o * in;
        for (std::size_t k = 0; k < in; ++k) wrow[k] += g * xi[k];
      }
    }
    Matrix dx(n, in, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* dzi = dz.row(i);
      double* dxi = dx.row(i);
      for (std::size_t o = 0; o < w; ++o) {
        const double g = dzi[o];
        if (g == 0.0) continue;
        const double* wrow = layer.weight.row(o);
        for (std::size_t k = 0; k < in; ++k) dxi[k] += g * wrow[k];
      }
    }
    grad = std::move(dx);
  }
  grads.input = std::move(grad);
  return grads;
}

std::size_t Mlp::param_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += layer.weight.size() + layer.bias.size();
    if (layer.bn) count += 2 * layer.bn->gamma.size();
  }
  return count;
}

std::vector<double> Mlp::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    if (layer.bn) {
      out.insert(out.end(), layer.bn->gamma.begin(), layer.bn->gamma.end());
      out.insert(out.end(), layer.bn->beta.begin(), layer.bn->beta.end());
    }
  }
  return out;
}

void Mlp::set_flat_params(const std::vector<double>& params) {
  require(params.size() == param_count(), "set_flat_params: length mismatch");
  std::size_t off = 0;
  for (auto& layer : layers_) {
    for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = params[off++];
    for (auto& b : layer.bias) b = params[off++];
    if (layer.bn) {
      for (auto& g : layer.bn->gamma) g = params[off++];
      for (auto& s : layer.bn->beta) s = params[off++];
    }
  }
}

void Mlp::absorb_batch_stats(const ForwardCache& cache) {
  require(cache.mode == Mode::Train, "absorb_batch_stats: needs a Train-mode cache");
  require(cache.layers.size() == layers_.size(), "absorb_batch_stats: cache mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!layers_[l].bn) continue;
    BatchNorm& bn = *layers_[l].bn;
    const LayerCache& lc = cache.layers[l];
    require(lc.batch_mean.size() == bn.running_mean.size(),
            "absorb_batch_stats: width mismatch");
    for (std::size_t j = 0; j < bn.running_mean.size(); ++j) {
      bn.running_mean[j] = bn.momentum * bn.running_mean[j] + (1.0 - bn.momentum) * lc.batch_mean[j];
      bn.running_var[j] = bn.momentum * bn.running_var[j] + (1.0 - bn.momentum) * lc.batch_var[j];
    }
  }
}

}  // namespace genrl::numkit
