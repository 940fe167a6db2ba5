// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_NETWORK_HPP
#define FCDSAE_NETWORK_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcdsae/errors.hpp"
#include "fcdsae/random.hpp"

namespace fcdsae {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Activation { ReLU, Linear };

/// Dense layer y = act(W x + b) with W of shape (fan_out x fan_in).
///
/// The storage is exposed through fixed-size maps, so values can be edited in
/// place but the shape chosen at construction cannot change.
template <typename Scalar>
class LayerParams {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  LayerParams(Eigen::Index fan_in, Eigen::Index fan_out, Activation act = Activation::ReLU)
      : weights_(MatrixType::Zero(fan_out, fan_in)), biases_(VectorType::Zero(fan_out)), act_(act) {
    if (fan_in < 1 || fan_out < 1) throw DimensionError("layer dimensions must be positive");
  }

  LayerParams(MatrixType weights, VectorType biases, Activation act = Activation::ReLU)
      : weights_(std::move(weights)), biases_(std::move(biases)), act_(act) {
    if (weights_.rows() < 1 || weights_.cols() < 1)
      throw DimensionError("layer dimensions must be positive");
    if (biases_.size() != weights_.rows())
      throw DimensionError("bias length " + std::to_string(biases_.size()) +
                           " does not match fan_out " + std::to_string(weights_.rows()));
  }

  Eigen::Index fan_in() const { return weights_.cols(); }
  Eigen::Index fan_out() const { return weights_.rows(); }
  Activation activation() const { return act_; }

  const MatrixType& weights() const { return weights_; }
  const VectorType& biases() const { return biases_; }
  Eigen::Map<MatrixType> weights() { return {weights_.data(), weights_.rows(), weights_.cols()}; }
  Eigen::Map<VectorType> biases() { return {biases_.data(), biases_.size()}; }

  bool all_finite() const { return weights_.allFinite() && biases_.allFinite(); }

  friend bool operator==(const LayerParams& a, const LayerParams& b) {
    return a.act_ == b.act_ && a.fan_in() == b.fan_in() && a.fan_out() == b.fan_out() &&
           a.weights_ == b.weights_ && a.biases_ == b.biases_;
  }

 private:
  MatrixType weights_;
  VectorType biases_;
  Activation act_;
};

/// Ordered stack of dense layers; consecutive widths are checked on construction.
template <typename Scalar>
class NetworkParams {
 public:
  using Layer = LayerParams<Scalar>;

  explicit NetworkParams(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw DimensionError("network needs at least one layer");
    for (std::size_t i = 1; i < layers_.size(); ++i) {
      if (layers_[i].fan_in() != layers_[i - 1].fan_out())
        throw DimensionError("layer " + std::to_string(i) + " fan_in " +
                             std::to_string(layers_[i].fan_in()) + " != layer " +
                             std::to_string(i - 1) + " fan_out " +
                             std::to_string(layers_[i - 1].fan_out()));
    }
  }

  /// All-zero parameters with the given widths, e.g. {10, 32, 16, 3}.
  static NetworkParams zeros(std::span<const int> topology) {
    if (topology.size() < 2) throw DimensionError("topology needs at least two widths");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < topology.size(); ++i)
      layers.emplace_back(topology[i], topology[i + 1]);
    return NetworkParams(std::move(layers));
  }

  /// Same shapes and activations as `other`, every entry zero.
  static NetworkParams zeros_like(const NetworkParams& other) {
    std::vector<Layer> layers;
    for (const auto& l : other.layers_) layers.emplace_back(l.fan_in(), l.fan_out(), l.activation());
    return NetworkParams(std::move(layers));
  }

  std::size_t num_layers() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::Index input_width() const { return layers_.front().fan_in(); }
  Eigen::Index output_width() const { return layers_.back().fan_out(); }

  std::vector<int> topology() const {
    std::vector<int> t{static_cast<int>(input_width())};
    for (const auto& l : layers_) t.push_back(static_cast<int>(l.fan_out()));
    return t;
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.all_finite()) return false;
    return true;
  }

  bool same_shape(const NetworkParams& other) const {
    if (other.layers_.size() != layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].fan_in() != other.layers_[i].fan_in() ||
          layers_[i].fan_out() != other.layers_[i].fan_out())
        return false;
    return true;
  }

  bool operator==(const NetworkParams&) const = default;

 private:
  std::vector<Layer> layers_;
};

/// He-uniform initialization: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
template <typename Scalar>
NetworkParams<Scalar> he_uniform(std::span<const int> topology, RandomSource& rng) {
  auto params = NetworkParams<Scalar>::zeros(topology);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto w = params.layer(l).weights();
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    // Row-major fill order keeps the draw sequence independent of storage order.
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return params;
}

/// Activations of every layer for one batch (rows = samples).
template <typename Scalar>
struct ForwardTrace {
  Matrix<Scalar> input;
  std::vector<Matrix<Scalar>> pre;   // W a + b, per layer
  std::vector<Matrix<Scalar>> post;  // act(pre), per layer

  const Matrix<Scalar>& output() const { return post.back(); }
  Eigen::Index batch_size() const { return input.rows(); }
};

template <typename Scalar>
Matrix<Scalar> apply_activation(const Matrix<Scalar>& pre, Activation act) {
  return act == Activation::ReLU ? Matrix<Scalar>(pre.cwiseMax(Scalar(0))) : pre;
}

template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward(const NetworkParams<Scalar>& params,
                             const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != params.input_width())
    throw DimensionError("layer 0: expected " + std::to_string(params.input_width()) +
                         " input columns, got " + std::to_string(batch.cols()));
  ForwardTrace<Scalar> trace;
  trace.input = batch;
  trace.pre.reserve(params.num_layers());
  trace.post.reserve(params.num_layers());
  const Matrix<Scalar>* prev = &trace.input;
  for (const auto& layer : params.layers()) {
    Matrix<Scalar> z = *prev * layer.weights().transpose();
    z.rowwise() += layer.biases().transpose();
    trace.post.push_back(apply_activation(z, layer.activation()));
    trace.pre.push_back(std::move(z));
    prev = &trace.post.back();
  }
  return trace;
}

/// Mean over every entry of (output - target)^2.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar mse_loss(const Eigen::MatrixBase<DerivedA>& output, const Eigen::MatrixBase<DerivedB>& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw DimensionError("mse_loss: output is " + std::to_string(output.rows()) + "x" +
                         std::to_string(output.cols()) + ", target is " +
                         std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
  if (output.size() == 0) return Scalar(0);
  return (output - target).squaredNorm() / static_cast<Scalar>(output.size());
}

template <typename Scalar>
using Gradients = NetworkParams<Scalar>;

/// Gradient of mse_loss(output, targets) plus any hidden-activation terms.
///
/// `hidden_grads[l]`, when non-empty, is dJ/d(post-activation of layer l) from an
/// extra loss term (the sparsity penalty) and is added before the ReLU mask.
/// The subgradient of ReLU at exactly zero is taken as zero.
template <typename Scalar>
Gradients<Scalar> backward(const ForwardTrace<Scalar>& trace, const NetworkParams<Scalar>& params,
                           const Matrix<Scalar>& targets,
                           std::span<const Matrix<Scalar>> hidden_grads = {}) {
  const std::size_t n = params.num_layers();
  if (trace.pre.size() != n || trace.post.size() != n)
    throw DimensionError("trace has " + std::to_string(trace.pre.size()) + " layers, params have " +
                         std::to_string(n));
  for (std::size_t l = 0; l < n; ++l)
    if (trace.pre[l].cols() != params.layer(l).fan_out() || trace.pre[l].rows() != trace.batch_size())
      throw DimensionError("trace layer " + std::to_string(l) + " does not match params");
  const Matrix<Scalar>& out = trace.output();
  if (targets.rows() != out.rows() || targets.cols() != out.cols())
    throw DimensionError("backward: targets shape does not match output");
  if (!hidden_grads.empty() && hidden_grads.size() != n - 1)
    throw DimensionError("backward: expected " + std::to_string(n - 1) +
                         " hidden gradient slots, got " + std::to_string(hidden_grads.size()));

  auto grads = Gradients<Scalar>::zeros_like(params);
  Matrix<Scalar> d_post = (out - targets) * (Scalar(2) / static_cast<Scalar>(out.size()));
  for (std::size_t l = n; l-- > 0;) {
    const auto& layer = params.layer(l);
    if (l + 1 < n && !hidden_grads.empty() && hidden_grads[l].size() != 0) {
      if (hidden_grads[l].rows() != d_post.rows() || hidden_grads[l].cols() != d_post.cols())
        throw DimensionError("hidden gradient for layer " + std::to_string(l) +
                             " has wrong shape");
      d_post += hidden_grads[l];
    }
    Matrix<Scalar> d_pre = d_post;
    if (layer.activation() == Activation::ReLU)
      d_pre = (trace.pre[l].array() > Scalar(0)).select(d_post, Scalar(0));
    const Matrix<Scalar>& prev = l == 0 ? trace.input : trace.post[l - 1];
    grads.layer(l).weights() = d_pre.transpose() * prev;
    grads.layer(l).biases() = d_pre.colwise().sum().transpose();
    if (l > 0) d_post = d_pre * layer.weights();
  }
  return grads;
}

/// Adam optimizer state with bias-corrected moments.
template <typename Scalar>
struct AdamState {
  NetworkParams<Scalar> first_moment;
  NetworkParams<Scalar> second_moment;
  std::int64_t step_count = 0;
  Scalar lr = Scalar(0.001);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  explicit AdamState(const NetworkParams<Scalar>& like, Scalar learning_rate = Scalar(0.001))
      : first_moment(NetworkParams<Scalar>::zeros_like(like)),
        second_moment(NetworkParams<Scalar>::zeros_like(like)),
        lr(learning_rate) {}
};

namespace detail {

template <typename Scalar, typename P, typename G, typename M>
void adam_update(P&& p, const G& g, M&& m, M&& v, const AdamState<Scalar>& s, Scalar c1, Scalar c2) {
  m = s.beta1 * m + (Scalar(1) - s.beta1) * g;
  v = s.beta2 * v + (Scalar(1) - s.beta2) * g.cwiseProduct(g);
  p.array() -= s.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
}

}  // namespace detail

/// One Adam update of `params` in place. Rejects non-finite gradients without
/// touching params or state.
template <typename Scalar>
void adam_step(NetworkParams<Scalar>& params, const Gradients<Scalar>& grads, AdamState<Scalar>& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment))
    throw DimensionError("adam_step: params, gradients and state shapes differ");
  for (std::size_t l = 0; l < grads.num_layers(); ++l)
    if (!grads.layer(l).all_finite())
      throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l));

  ++state.step_count;
  const auto t = static_cast<Scalar>(state.step_count);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto& layer = params.layer(l);
    const auto& g = grads.layer(l);
    auto& m = state.first_moment.layer(l);
    auto& v = state.second_moment.layer(l);
    detail::adam_update(layer.weights(), g.weights(), m.weights(), v.weights(), state, c1, c2);
    detail::adam_update(layer.biases(), g.biases(), m.biases(), v.biases(), state, c1, c2);
  }
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& row) {
  int best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = static_cast<int>(i);
  return best;
}

}  // namespace fcdsae

#endif  // FCDSAE_NETWORK_HPP
