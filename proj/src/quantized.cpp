// SPDX-License-Identifier: Apache-2.0

#include "fcdsae/quantized.hpp"

#include <ostream>
#include <string>

namespace fcdsae {

QuantizeOutcome quantize_model(const Network& params, const Standardizer& std, const QFormat& fmt,
                               std::uint64_t split_seed) {
  fmt.validate();

  QuantizeOutcome out;
  out.model.format = fmt;
  out.model.split_seed = split_seed;
  const auto q = [&](double x, const QFormat& f) {
    const auto r = quantize(x, f);
    if (r == f.raw_max() || r == f.raw_min()) {
      // Hitting a bound counts only when the value actually lies beyond it.
      if (x > dequantize(f.raw_max(), f) || x < dequantize(f.raw_min(), f)) ++out.saturated;
    }
    return r;
  };

  for (const auto& layer : params.layers()) {
    QuantizedLayer ql;
    ql.activation = layer.activation();
    ql.weights.resize(layer.fan_out(), layer.fan_in());
    ql.biases.resize(layer.fan_out());
    for (Eigen::Index r = 0; r < layer.fan_out(); ++r) {
      for (Eigen::Index c = 0; c < layer.fan_in(); ++c) ql.weights(r, c) = q(layer.weights()(r, c), fmt);
      ql.biases(r) = q(layer.biases()(r), fmt);
    }
    out.model.layers.push_back(std::move(ql));
  }

  const auto sensor = fmt.sensor_format();
  for (int j = 0; j < kNumFeatures; ++j) {
    out.model.mean[j] = q(std.mean(j), sensor);
    out.model.stddev[j] = std::max<std::int64_t>(1, q(std.stddev(j), sensor));
  }
  return out;
}

Network dequantize_network(const QuantizedModel& qm) {
  std::vector<Network::Layer> layers;
  for (const auto& ql : qm.layers) {
    Matrix<double> w = ql.weights.cast<double>() * qm.format.lsb();
    Vector<double> b = ql.biases.cast<double>() * qm.format.lsb();
    layers.emplace_back(std::move(w), std::move(b), ql.activation);
  }
  return Network(std::move(layers));
}

std::array<std::int64_t, kFrameInputs> encode_inputs(const FeatureVector& features, const QFormat& fmt) {
  const auto sensor = fmt.sensor_format();
  std::array<std::int64_t, kFrameInputs> words{};
  for (int j = 0; j < kFrameInputs; ++j) words[j] = quantize(features[j], sensor);
  return words;
}

QForwardResult q_forward(const QuantizedModel& qm, std::span<const std::int64_t> input_words) {
  if (input_words.size() != kFrameInputs)
    throw FrameError("frame must carry " + std::to_string(kFrameInputs) + " input words, got " +
                     std::to_string(input_words.size()));
  const int word = qm.format.total_bits;
  const int acc_bits = qm.format.accumulator_bits();
  const int f = qm.format.fractional_bits();

  std::vector<Wide> act(kFrameInputs);
  for (int j = 0; j < kFrameInputs; ++j) {
    const Wide centered = saturate_bits(Wide(input_words[j]) - qm.mean[j], acc_bits);
    act[j] = saturate_bits(round_div(centered << f, qm.stddev[j]), word);
  }

  std::vector<Wide> next;
  for (const auto& layer : qm.layers) {
    if (layer.weights.cols() != static_cast<Eigen::Index>(act.size()))
      throw DimensionError("q_forward: layer width mismatch");
    next.assign(static_cast<std::size_t>(layer.weights.rows()), 0);
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      Wide acc = saturate_bits(Wide(layer.biases(i)) << f, acc_bits);
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
        acc = saturate_bits(acc + Wide(layer.weights(i, j)) * act[static_cast<std::size_t>(j)], acc_bits);
      Wide a = saturate_bits(round_shift(acc, f), word);
      if (layer.activation == Activation::ReLU && a < 0) a = 0;
      next[static_cast<std::size_t>(i)] = a;
    }
    act.swap(next);
  }
  if (act.size() != kFrameOutputs) throw DimensionError("q_forward: model output width is not 3");

  QForwardResult r;
  for (int k = 0; k < kFrameOutputs; ++k) r.output[k] = static_cast<std::int64_t>(act[k]);
  for (int k = 1; k < kFrameOutputs; ++k)
    if (r.output[k] > r.output[r.predicted]) r.predicted = k;
  return r;
}

StreamFrame run_frame(const QuantizedModel& qm, const FeatureVector& features) {
  StreamFrame frame;
  frame.input = encode_inputs(features, qm.format);
  const auto r = q_forward(qm, frame.input);
  frame.output = r.output;
  frame.predicted = r.predicted;
  return frame;
}

QuantEvaluation evaluate_quantized(const QuantizedModel& qm, std::span<const LabeledExample> examples,
                                   std::optional<double> float_accuracy) {
  QuantEvaluation out;
  out.frames.reserve(examples.size());
  out.eval.predictions.reserve(examples.size());
  Matrix<double> outputs(static_cast<Eigen::Index>(examples.size()), kFrameOutputs);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.frames.push_back(run_frame(qm, examples[i].features));
    const auto& fr = out.frames.back();
    out.eval.predictions.push_back(fr.predicted);
    for (int k = 0; k < kFrameOutputs; ++k)
      outputs(static_cast<Eigen::Index>(i), k) = dequantize(fr.output[k], qm.format);
  }
  out.eval.confusion = confusion(labels_of(examples), out.eval.predictions);
  if (!examples.empty()) {
    out.eval.metrics = metric_block(out.eval.confusion);
    out.eval.output_mse = mse_loss<double>(outputs, one_hot(examples));
    if (float_accuracy) out.accuracy_delta = out.eval.metrics.accuracy - *float_accuracy;
  }
  return out;
}

void write_frame_dump(std::ostream& out, std::span<const StreamFrame> frames) {
  std::string buf;
  for (const auto& fr : frames) {
    for (auto w : fr.input) buf += std::to_string(w) + ' ';
    for (int k = 0; k < kFrameOutputs; ++k) {
      buf += std::to_string(fr.output[k]);
      buf += k + 1 < kFrameOutputs ? ' ' : '\n';
    }
  }
  out << buf;
}

}  // namespace fcdsae
