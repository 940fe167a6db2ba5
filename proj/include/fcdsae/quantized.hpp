// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_QUANTIZED_HPP
#define FCDSAE_QUANTIZED_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fcdsae/dataset.hpp"
#include "fcdsae/fixed_point.hpp"
#include "fcdsae/trainer.hpp"

namespace fcdsae {

using RawMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using RawVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct QuantizedLayer {
  RawMatrix weights;  // fan_out x fan_in, format word
  RawVector biases;   // fan_out, format word
  Activation activation = Activation::ReLU;

  bool operator==(const QuantizedLayer& o) const {
    return activation == o.activation && weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           weights == o.weights && biases.size() == o.biases.size() && biases == o.biases;
  }
};

/// Fixed-point image of a trained network, including its input standardizer.
///
/// Weights and biases are raw words of `format`. The standardizer mean and
/// standard deviation are raw words of `format.sensor_format()`, the same
/// format as incoming sensor words.
struct QuantizedModel {
  QFormat format;
  std::vector<QuantizedLayer> layers;
  std::array<std::int64_t, kNumFeatures> mean{};
  std::array<std::int64_t, kNumFeatures> stddev{};
  std::uint64_t split_seed = 0;

  bool operator==(const QuantizedModel&) const = default;
};

struct QuantizeOutcome {
  QuantizedModel model;
  std::size_t saturated = 0;  // values clipped to the representable range
};

/// Standard deviations that would quantize to zero are stored as the smallest
/// positive word. Streaming with q_forward needs a 10 -> ... -> 3 network.
QuantizeOutcome quantize_model(const Network& params, const Standardizer& std, const QFormat& fmt,
                               std::uint64_t split_seed = 0);

/// Float network with every parameter replaced by its dequantized word.
Network dequantize_network(const QuantizedModel& qm);

inline constexpr int kFrameInputs = kNumFeatures;
inline constexpr int kFrameOutputs = kNumClasses;

/// One streamed transaction: sensor words in, output words out.
struct StreamFrame {
  std::array<std::int64_t, kFrameInputs> input{};
  std::array<std::int64_t, kFrameOutputs> output{};
  int predicted = 0;
};

struct QForwardResult {
  std::array<std::int64_t, kFrameOutputs> output{};
  int predicted = 0;
};

/// Raw sensor readings to input words (CSV column order, sensor format).
std::array<std::int64_t, kFrameInputs> encode_inputs(const FeatureVector& features, const QFormat& fmt);

/// Fixed-point inference on one frame of 10 sensor words.
///
/// With T = total bits, f = fractional bits and every intermediate held in a
/// 128-bit integer:
///   1. z_j = sat_T(round(sat_2T(x_j - mean_j) * 2^f / std_j))
///   2. per layer and output unit i:
///        acc = sat_2T(b_i * 2^f); acc = sat_2T(acc + w_ij * a_j) for j ascending
///        a_i = sat_T(round(acc / 2^f)), then max(0, a_i) for ReLU layers
///   3. predicted = argmax of the final words, ties to the lowest index
/// Rounding is to nearest with halves away from zero. Throws FrameError when
/// the frame is not exactly 10 words.
QForwardResult q_forward(const QuantizedModel& qm, std::span<const std::int64_t> input_words);

StreamFrame run_frame(const QuantizedModel& qm, const FeatureVector& features);

struct QuantEvaluation {
  Evaluation eval;
  /// quantized accuracy - float accuracy, when a float reference was supplied
  std::optional<double> accuracy_delta;
  std::vector<StreamFrame> frames;
};

/// Examples carry raw (unstandardized) features.
QuantEvaluation evaluate_quantized(const QuantizedModel& qm, std::span<const LabeledExample> examples,
                                   std::optional<double> float_accuracy = std::nullopt);

/// One line per frame: 10 input words then 3 output words, space separated.
void write_frame_dump(std::ostream& out, std::span<const StreamFrame> frames);

}  // namespace fcdsae

#endif  // FCDSAE_QUANTIZED_HPP
