// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_SPARSITY_HPP
#define FCDSAE_SPARSITY_HPP

#include <cmath>
#include <string>
#include <vector>

#include "fcdsae/network.hpp"

namespace fcdsae {

/// KL sparsity penalty settings.
///
/// `xi` is the target average activation of each hidden unit and `psi` the
/// weight of the summed divergence in the total loss. Batch-mean activations
/// are clamped into [clamp_eps, 1 - clamp_eps] before the divergence is taken,
/// since ReLU units are not confined to (0, 1).
struct SparsityConfig {
  double xi = 0.05;
  double psi = 1e-3;
  double clamp_eps = 1e-6;
  /// Hidden layers (0-based layer indices) to penalize; empty means all of them.
  std::vector<std::size_t> layers;

  void validate() const {
    if (!(xi > 0.0 && xi < 1.0)) throw DomainError("sparsity xi must lie in (0, 1)");
    if (!(psi >= 0.0) || !std::isfinite(psi)) throw DomainError("sparsity psi must be >= 0");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5))
      throw DomainError("sparsity clamp_eps must lie in (0, 0.5)");
  }

  bool penalizes(std::size_t layer_index) const {
    if (layers.empty()) return true;
    for (auto l : layers)
      if (l == layer_index) return true;
    return false;
  }
};

/// Batch-mean activations of one hidden layer, before and after clamping.
template <typename Scalar>
struct ActivationSummary {
  std::size_t layer_index = 0;
  Vector<Scalar> raw;      // (1/p) sum_i h_k(x_i)
  Vector<Scalar> clamped;  // raw clamped into [eps, 1 - eps]
  Eigen::Array<bool, Eigen::Dynamic, 1> was_clamped;
};

template <typename Scalar>
ActivationSummary<Scalar> average_activation(const ForwardTrace<Scalar>& trace, std::size_t layer_index,
                                             const SparsityConfig& cfg) {
  if (layer_index + 1 >= trace.post.size())
    throw DimensionError("average_activation: layer " + std::to_string(layer_index) +
                         " is not a hidden layer");
  const auto& h = trace.post[layer_index];
  if (h.rows() == 0) throw DomainError("average_activation: empty batch");

  const Scalar lo = static_cast<Scalar>(cfg.clamp_eps);
  const Scalar hi = Scalar(1) - lo;
  ActivationSummary<Scalar> s;
  s.layer_index = layer_index;
  s.raw = h.colwise().mean().transpose();
  s.clamped = s.raw.cwiseMax(lo).cwiseMin(hi);
  s.was_clamped = (s.raw.array() < lo) || (s.raw.array() > hi);
  return s;
}

/// KL(xi || xi_k) between Bernoulli distributions, natural log.
template <typename Scalar>
Scalar kl_divergence(Scalar xi, Scalar xi_k) {
  if (!(xi > Scalar(0) && xi < Scalar(1)) || !(xi_k > Scalar(0) && xi_k < Scalar(1)))
    throw DomainError("kl_divergence: arguments must lie strictly inside (0, 1)");
  using std::log;
  return xi * log(xi / xi_k) + (Scalar(1) - xi) * log((Scalar(1) - xi) / (Scalar(1) - xi_k));
}

template <typename Scalar>
std::vector<ActivationSummary<Scalar>> summarize_hidden(const ForwardTrace<Scalar>& trace,
                                                        const SparsityConfig& cfg) {
  std::vector<ActivationSummary<Scalar>> out;
  for (std::size_t l = 0; l + 1 < trace.post.size(); ++l)
    if (cfg.penalizes(l)) out.push_back(average_activation(trace, l, cfg));
  return out;
}

/// psi * sum over layers and units of KL(xi || xi_k).
template <typename Scalar>
Scalar penalty_total(const std::vector<ActivationSummary<Scalar>>& summaries, const SparsityConfig& cfg) {
  if (cfg.psi == 0.0) return Scalar(0);
  const auto xi = static_cast<Scalar>(cfg.xi);
  Scalar sum(0);
  for (const auto& s : summaries)
    for (Eigen::Index k = 0; k < s.clamped.size(); ++k) sum += kl_divergence(xi, s.clamped(k));
  return static_cast<Scalar>(cfg.psi) * sum;
}

/// dPenalty/dh_k(x_i) for every sample i of a batch of size p.
///
/// Each sample of a unit gets the same value (psi/p)(-xi/xi_k + (1-xi)/(1-xi_k)).
/// Units whose mean was clamped contribute nothing.
template <typename Scalar>
Matrix<Scalar> penalty_gradient(const ActivationSummary<Scalar>& summary, const SparsityConfig& cfg,
                                Eigen::Index batch_size) {
  const auto q = summary.clamped.size();
  Matrix<Scalar> grad = Matrix<Scalar>::Zero(batch_size, q);
  if (cfg.psi == 0.0 || batch_size == 0) return grad;
  const auto xi = static_cast<Scalar>(cfg.xi);
  const Scalar scale = static_cast<Scalar>(cfg.psi) / static_cast<Scalar>(batch_size);
  for (Eigen::Index k = 0; k < q; ++k) {
    if (summary.was_clamped(k)) continue;
    const Scalar m = summary.clamped(k);
    grad.col(k).setConstant(scale * (-xi / m + (Scalar(1) - xi) / (Scalar(1) - m)));
  }
  return grad;
}

/// Per-hidden-layer activation gradients in the slot layout `backward` expects.
template <typename Scalar>
std::vector<Matrix<Scalar>> sparsity_gradients(const ForwardTrace<Scalar>& trace, const SparsityConfig& cfg) {
  std::vector<Matrix<Scalar>> slots(trace.post.size() - 1);
  if (cfg.psi == 0.0) return slots;
  for (const auto& s : summarize_hidden(trace, cfg))
    slots[s.layer_index] = penalty_gradient(s, cfg, trace.batch_size());
  return slots;
}

/// J_total = MSE + psi * sum KL. With psi = 0 this is exactly mse_loss.
template <typename Scalar>
Scalar total_loss(const ForwardTrace<Scalar>& trace, const Matrix<Scalar>& targets, const SparsityConfig& cfg) {
  const Scalar mse = mse_loss<Scalar>(trace.output(), targets);
  if (cfg.psi == 0.0) return mse;
  return mse + penalty_total(summarize_hidden(trace, cfg), cfg);
}

}  // namespace fcdsae

#endif  // FCDSAE_SPARSITY_HPP
