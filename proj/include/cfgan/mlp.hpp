#pragma once

#include "cfgan/errors.hpp"
#include "cfgan/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <type_traits>
#include <vector>

namespace cfgan {

enum class LayerKind { kLinear, kProjection, kRelu, kLeakyRelu, kTanh };

/// One layer of a fully-connected network. Linear layers carry a weight matrix
/// and a bias; projection layers carry weights only; activations are
/// parameter-free and keep the width.
struct LayerSpec {
  LayerKind kind = LayerKind::kLinear;
  Index in_dim = 0;
  Index out_dim = 0;
  double slope = 0.2;  // leaky_relu only

  static LayerSpec linear(Index in, Index out) { return {LayerKind::kLinear, in, out, 0.0}; }
  static LayerSpec projection(Index in, Index out) { return {LayerKind::kProjection, in, out, 0.0}; }
  static LayerSpec relu(Index dim) { return {LayerKind::kRelu, dim, dim, 0.0}; }
  static LayerSpec leaky_relu(Index dim, double slope = 0.2) {
    return {LayerKind::kLeakyRelu, dim, dim, slope};
  }
  static LayerSpec tanh(Index dim) { return {LayerKind::kTanh, dim, dim, 0.0}; }

  Index param_count() const {
    switch (kind) {
      case LayerKind::kLinear:
        return in_dim * out_dim + out_dim;
      case LayerKind::kProjection:
        return in_dim * out_dim;
      default:
        return 0;
    }
  }

  bool operator==(const LayerSpec&) const = default;
};

/// Activation choice used when assembling networks from widths.
enum class Activation { kNone, kRelu, kLeakyRelu, kTanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kTanh:
      return "tanh";
    default:
      return "linear";
  }
}

/// Fully-connected network with exact reverse-mode gradients with respect to
/// both its parameters and its inputs.
///
/// All parameters live in one flat vector in declaration order (per layer:
/// column-major weights of shape out x in, then the bias), which is also the
/// order used by the optimizer and by model files.
template <typename Scalar>
class Mlp {
 public:
  using Mat = MatrixX<Scalar>;
  using Vec = VectorX<Scalar>;

  Mlp() = default;

  explicit Mlp(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    Index offset = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const LayerSpec& l = layers_[i];
      if (l.in_dim <= 0 || l.out_dim <= 0)
        throw ConfigError("layer " + std::to_string(i) + " has a non-positive dimension");
      if (i > 0 && layers_[i - 1].out_dim != l.in_dim)
        throw ConfigError("layer " + std::to_string(i) + " input width does not match previous layer");
      const bool activation = l.kind != LayerKind::kLinear && l.kind != LayerKind::kProjection;
      if (activation && l.in_dim != l.out_dim)
        throw ConfigError("activation layer " + std::to_string(i) + " must keep its width");
      if (l.kind == LayerKind::kLeakyRelu && !(l.slope > 0.0 && l.slope < 1.0))
        throw ConfigError("leaky_relu slope must lie in (0,1)");
      offsets_.push_back(offset);
      offset += l.param_count();
    }
    params_ = Vec::Zero(offset);
  }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }
  Index param_count() const { return params_.size(); }

  const Vec& params() const { return params_; }
  Vec& mutable_params() { return params_; }
  void set_params(const Vec& p) {
    if (p.size() != params_.size()) throw ConfigError("parameter vector has the wrong length");
    params_ = p;
  }

  Eigen::Map<const Mat> weights(std::size_t layer) const {
    const LayerSpec& l = layers_[layer];
    return Eigen::Map<const Mat>(params_.data() + offsets_[layer], l.out_dim, l.in_dim);
  }
  Eigen::Map<Mat> weights(std::size_t layer) {
    const LayerSpec& l = layers_[layer];
    return Eigen::Map<Mat>(params_.data() + offsets_[layer], l.out_dim, l.in_dim);
  }
  Eigen::Map<const Vec> bias(std::size_t layer) const {
    const LayerSpec& l = layers_[layer];
    return Eigen::Map<const Vec>(params_.data() + offsets_[layer] + l.in_dim * l.out_dim, l.out_dim);
  }
  Eigen::Map<Vec> bias(std::size_t layer) {
    const LayerSpec& l = layers_[layer];
    return Eigen::Map<Vec>(params_.data() + offsets_[layer] + l.in_dim * l.out_dim, l.out_dim);
  }

  /// Fills weights with N(0, stddev^2) draws and zeroes the biases.
  template <typename Engine>
  void init_gaussian(Engine& rng, Scalar stddev) {
    std::normal_distribution<double> normal(0.0, static_cast<double>(stddev));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].param_count() == 0) continue;
      auto w = weights(i);
      for (Index c = 0; c < w.cols(); ++c)
        for (Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(normal(rng));
      if (layers_[i].kind == LayerKind::kLinear) bias(i).setZero();
    }
  }

  bool operator==(const Mlp& other) const {
    return layers_ == other.layers_ && params_.size() == other.params_.size() &&
           params_ == other.params_;
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Index> offsets_;
  Vec params_;
};

using MlpNet = Mlp<double>;

/// Stacks linear layers of the given hidden widths with `hidden` activations
/// between them and an optional activation on the output.
inline std::vector<LayerSpec> mlp_layers(Index in_dim, const std::vector<Index>& hidden,
                                         Index out_dim, Activation hidden_act,
                                         Activation output_act = Activation::kNone,
                                         double leaky_slope = 0.2) {
  auto push_act = [&](std::vector<LayerSpec>& out, Activation a, Index dim) {
    switch (a) {
      case Activation::kRelu:
        out.push_back(LayerSpec::relu(dim));
        break;
      case Activation::kLeakyRelu:
        out.push_back(LayerSpec::leaky_relu(dim, leaky_slope));
        break;
      case Activation::kTanh:
        out.push_back(LayerSpec::tanh(dim));
        break;
      case Activation::kNone:
        break;
    }
  };
  std::vector<LayerSpec> layers;
  Index prev = in_dim;
  for (Index w : hidden) {
    layers.push_back(LayerSpec::linear(prev, w));
    push_act(layers, hidden_act, w);
    prev = w;
  }
  layers.push_back(LayerSpec::linear(prev, out_dim));
  push_act(layers, output_act, out_dim);
  return layers;
}

namespace detail {

template <typename Scalar>
void check_batch(const Mlp<Scalar>& net, const MatrixX<Scalar>& batch) {
  if (net.layers().empty()) throw ConfigError("network has no layers");
  if (batch.cols() != net.input_dim())
    throw ConfigError("batch has " + std::to_string(batch.cols()) + " columns but the network expects " +
                      std::to_string(net.input_dim()));
}

template <typename Scalar>
MatrixX<Scalar> apply_layer(const Mlp<Scalar>& net, std::size_t i, const MatrixX<Scalar>& in) {
  const LayerSpec& l = net.layers()[i];
  switch (l.kind) {
    case LayerKind::kLinear: {
      MatrixX<Scalar> out = in * net.weights(i).transpose();
      out.rowwise() += net.bias(i).transpose();
      return out;
    }
    case LayerKind::kProjection:
      return in * net.weights(i).transpose();
    case LayerKind::kRelu:
      return in.cwiseMax(Scalar(0));
    case LayerKind::kLeakyRelu: {
      const Scalar slope = static_cast<Scalar>(l.slope);
      return in.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? v : slope * v; });
    }
    case LayerKind::kTanh:
      return in.array().tanh().matrix();
  }
  return in;
}

}  // namespace detail

/// Evaluates the network on a batch (one point per row).
template <typename Scalar>
MatrixX<Scalar> forward(const Mlp<Scalar>& net, const std::type_identity_t<MatrixX<Scalar>>& batch) {
  detail::check_batch(net, batch);
  MatrixX<Scalar> a = batch;
  for (std::size_t i = 0; i < net.layers().size(); ++i) a = detail::apply_layer(net, i, a);
  return a;
}

template <typename Scalar>
struct MlpGradients {
  VectorX<Scalar> params;  // same layout as Mlp::params()
  MatrixX<Scalar> inputs;  // same shape as the batch
};

/// Reverse-mode gradients of sum_i <upstream_i, net(batch_i)> with respect to
/// the parameters and to every input row.
template <typename Scalar>
MlpGradients<Scalar> backward(const Mlp<Scalar>& net, const std::type_identity_t<MatrixX<Scalar>>& batch,
                              const std::type_identity_t<MatrixX<Scalar>>& upstream) {
  detail::check_batch(net, batch);
  if (upstream.rows() != batch.rows() || upstream.cols() != net.output_dim())
    throw ConfigError("upstream gradient shape does not match network output");

  const std::size_t n_layers = net.layers().size();
  std::vector<MatrixX<Scalar>> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(batch);
  for (std::size_t i = 0; i < n_layers; ++i) acts.push_back(detail::apply_layer(net, i, acts.back()));

  MlpGradients<Scalar> g;
  g.params = VectorX<Scalar>::Zero(net.param_count());
  MatrixX<Scalar> delta = upstream;
  Index offset = net.param_count();
  for (std::size_t k = n_layers; k-- > 0;) {
    const LayerSpec& l = net.layers()[k];
    offset -= l.param_count();
    const MatrixX<Scalar>& in = acts[k];
    switch (l.kind) {
      case LayerKind::kLinear:
      case LayerKind::kProjection: {
        Eigen::Map<MatrixX<Scalar>> dw(g.params.data() + offset, l.out_dim, l.in_dim);
        dw.noalias() = delta.transpose() * in;
        if (l.kind == LayerKind::kLinear) {
          Eigen::Map<VectorX<Scalar>> db(g.params.data() + offset + l.in_dim * l.out_dim, l.out_dim);
          db = delta.colwise().sum().transpose();
        }
        delta = (delta * net.weights(k)).eval();
        break;
      }
      case LayerKind::kRelu:
        delta = delta.cwiseProduct(in.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
        break;
      case LayerKind::kLeakyRelu: {
        const Scalar slope = static_cast<Scalar>(l.slope);
        delta = delta.cwiseProduct(in.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? Scalar(1) : slope; }));
        break;
      }
      case LayerKind::kTanh:
        delta = delta.cwiseProduct((Scalar(1) - acts[k + 1].array().square()).matrix());
        break;
    }
  }
  g.inputs = std::move(delta);
  return g;
}

template <typename Scalar>
VectorX<Scalar> backward_params(const Mlp<Scalar>& net, const std::type_identity_t<MatrixX<Scalar>>& batch,
                                const std::type_identity_t<MatrixX<Scalar>>& upstream) {
  return backward(net, batch, upstream).params;
}

/// Row i of the result is the gradient of the scalar output at batch row i.
template <typename Scalar>
MatrixX<Scalar> input_gradients(const Mlp<Scalar>& net, const std::type_identity_t<MatrixX<Scalar>>& batch) {
  if (net.output_dim() != 1) throw ConfigError("input gradient requires a scalar-output network");
  return backward(net, batch, MatrixX<Scalar>(MatrixX<Scalar>::Ones(batch.rows(), 1))).inputs;
}

/// Gradient of a scalar-output network at a single point.
template <typename Scalar>
VectorX<Scalar> backward_input(const Mlp<Scalar>& net, const VectorX<Scalar>& x) {
  const MatrixX<Scalar> batch = x.transpose();
  return input_gradients(net, batch).row(0).transpose();
}

/// Scalar outputs of a scalar-output network, one per row.
template <typename Scalar>
VectorX<Scalar> forward_scalar(const Mlp<Scalar>& net, const std::type_identity_t<MatrixX<Scalar>>& batch) {
  if (net.output_dim() != 1) throw ConfigError("expected a scalar-output network");
  return forward(net, batch).col(0);
}

}  // namespace cfgan
