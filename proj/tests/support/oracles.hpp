// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used by the unit and acceptance tests.
// None of these call into the code path they are used to check.

#ifndef FCDSAE_TESTS_ORACLES_HPP
#define FCDSAE_TESTS_ORACLES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fcdsae/network.hpp"
#include "fcdsae/quantized.hpp"
#include "fcdsae/sparsity.hpp"

namespace fcdsae::oracle {

// ---------------------------------------------------------------------------
// Central finite differences of J_total with respect to every parameter.

struct GradCheck {
  double worst_rel = 0;  // largest relative error among entries above the floor
  std::size_t failures = 0;
  std::size_t checked = 0;
};

inline bool grad_entry_ok(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) <= rel_tol;
}

inline GradCheck check_gradients(NetworkParams<double> params, const Matrix<double>& x, const Matrix<double>& y,
                                 const SparsityConfig& cfg, double h = 1e-6, double rel_tol = 1e-4,
                                 double abs_floor = 1e-7) {
  const auto trace = forward(params, x);
  const auto hidden = sparsity_gradients(trace, cfg);
  const auto grads = backward<double>(trace, params, y, hidden);
  const auto loss = [&](const NetworkParams<double>& p) { return total_loss(forward(p, x), y, cfg); };

  GradCheck gc;
  const auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const double up = loss(params);
    slot = keep - h;
    const double down = loss(params);
    slot = keep;
    const double numeric = (up - down) / (2 * h);
    ++gc.checked;
    if (!grad_entry_ok(analytic, numeric, rel_tol, abs_floor)) ++gc.failures;
    const double diff = std::abs(analytic - numeric);
    if (diff > abs_floor)
      gc.worst_rel = std::max(gc.worst_rel, diff / std::max(std::abs(analytic), std::abs(numeric)));
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto w = params.layer(l).weights();
    auto b = params.layer(l).biases();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) probe(w(r, c), grads.layer(l).weights()(r, c));
    for (Eigen::Index r = 0; r < b.size(); ++r) probe(b(r), grads.layer(l).biases()(r));
  }
  return gc;
}

// ---------------------------------------------------------------------------
// Classification metrics by direct recount over the label lists.

struct RecountMetrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, mse = 0;
};

inline RecountMetrics recount_metrics(std::span<const int> truth, std::span<const int> pred) {
  RecountMetrics m;
  const double n = static_cast<double>(truth.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  m.accuracy = static_cast<double>(hits) / n;
  for (int k = 0; k < 3; ++k) {
    std::size_t tp = 0, is_k = 0, said_k = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      is_k += truth[i] == k;
      said_k += pred[i] == k;
      tp += truth[i] == k && pred[i] == k;
    }
    const double p = said_k ? static_cast<double>(tp) / static_cast<double>(said_k) : 0.0;
    const double r = is_k ? static_cast<double>(tp) / static_cast<double>(is_k) : 0.0;
    const double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    const double w = static_cast<double>(is_k) / n;
    m.precision += w * p;
    m.recall += w * r;
    m.f1 += w * f;
  }
  m.mse = static_cast<double>(truth.size() - hits) / n;
  return m;
}

// ---------------------------------------------------------------------------
// Straight-line scalar model of the fixed-point datapath.

using I128 = __int128;

inline I128 clamp_signed(I128 v, int bits) {
  I128 hi = 1;
  for (int i = 0; i < bits - 1; ++i) hi *= 2;
  return std::clamp<I128>(v, -hi, hi - 1);
}

inline I128 pow2(int e) {
  I128 v = 1;
  for (int i = 0; i < e; ++i) v *= 2;
  return v;
}

// Nearest integer to num/den with ties away from zero, via quotient and remainder.
inline I128 divide_nearest(I128 num, I128 den) {
  I128 q = num / den;
  const I128 r = num % den;
  const I128 ar = r < 0 ? -r : r;
  const I128 ad = den < 0 ? -den : den;
  if (2 * ar >= ad) q += ((num < 0) == (den < 0)) ? 1 : -1;
  return q;
}

inline std::array<std::int64_t, 3> scalar_q_forward(const QuantizedModel& qm, std::span<const std::int64_t> in,
                                                    int* predicted = nullptr) {
  const int T = qm.format.total_bits;
  const int f = qm.format.fractional_bits();
  const I128 one = pow2(f);
  std::vector<I128> a(in.size());
  for (std::size_t j = 0; j < in.size(); ++j) {
    const I128 d = clamp_signed(I128(in[j]) - I128(qm.mean[j]), 2 * T);
    a[j] = clamp_signed(divide_nearest(d * one, I128(qm.stddev[j])), T);
  }
  for (const auto& layer : qm.layers) {
    std::vector<I128> out;
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      I128 acc = clamp_signed(I128(layer.biases(i)) * one, 2 * T);
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
        acc = clamp_signed(acc + I128(layer.weights(i, j)) * a[static_cast<std::size_t>(j)], 2 * T);
      I128 v = clamp_signed(divide_nearest(acc, one), T);
      if (layer.activation == Activation::ReLU) v = std::max<I128>(v, 0);
      out.push_back(v);
    }
    a = out;
  }
  std::array<std::int64_t, 3> r{static_cast<std::int64_t>(a[0]), static_cast<std::int64_t>(a[1]),
                                static_cast<std::int64_t>(a[2])};
  if (predicted) {
    *predicted = 0;
    if (r[1] > r[*predicted]) *predicted = 1;
    if (r[2] > r[*predicted]) *predicted = 2;
  }
  return r;
}

/// Random quantized model 10 -> hidden... -> 3 with words spread over the
/// whole range of `fmt`, so saturation paths are exercised.
template <typename Rng>
QuantizedModel random_quantized_model(Rng& rng, const QFormat& fmt, std::vector<int> hidden) {
  QuantizedModel qm;
  qm.format = fmt;
  const auto word = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo) + 1));
  };
  // Mostly small words with an occasional extreme one.
  const auto param = [&]() -> std::int64_t {
    if (rng.below(10) == 0) return word(fmt.raw_min(), fmt.raw_max());
    const std::int64_t span = std::max<std::int64_t>(1, fmt.raw_max() / 16);
    return word(-span, span);
  };
  std::vector<int> widths{kNumFeatures};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(kNumClasses);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    QuantizedLayer ql;
    ql.weights.resize(widths[l + 1], widths[l]);
    ql.biases.resize(widths[l + 1]);
    for (Eigen::Index r = 0; r < ql.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < ql.weights.cols(); ++c) ql.weights(r, c) = param();
      ql.biases(r) = param();
    }
    qm.layers.push_back(std::move(ql));
  }
  const auto sensor = fmt.sensor_format();
  for (int j = 0; j < kNumFeatures; ++j) {
    qm.mean[j] = word(-(std::int64_t(1) << std::min(40, sensor.total_bits - 2)), std::int64_t(1) << std::min(40, sensor.total_bits - 2));
    qm.stddev[j] = word(1, std::int64_t(1) << std::min(40, sensor.total_bits - 2));
  }
  return qm;
}

}  // namespace fcdsae::oracle

#endif  // FCDSAE_TESTS_ORACLES_HPP
