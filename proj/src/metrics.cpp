// SPDX-License-Identifier: Apache-2.0

#include "fcdsae/metrics.hpp"

#include <cstdio>

#include "fcdsae/errors.hpp"

namespace fcdsae {

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw DimensionError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                         std::to_string(predicted.size()) + " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t > 2 || p < 0 || p > 2)
      throw DomainError("confusion: label out of range at index " + std::to_string(i));
    ++cm.counts(t, p);
  }
  return cm;
}

MetricBlock metric_block(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total <= 0) throw DomainError("metric_block: empty confusion matrix");
  const double n = static_cast<double>(total);

  MetricBlock m;
  m.accuracy = static_cast<double>(cm.correct()) / n;
  for (int k = 0; k < 3; ++k) {
    const auto tp = static_cast<double>(cm.counts(k, k));
    const auto support = static_cast<double>(cm.counts.row(k).sum());
    const auto predicted = static_cast<double>(cm.counts.col(k).sum());
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = support > 0 ? tp / support : 0.0;
    const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double w = support / n;
    m.precision += w * precision;
    m.recall += w * recall;
    m.f1 += w * f1;
  }
  // Weighted recall is trace/total algebraically; pin it so rounding cannot split them.
  m.recall = m.accuracy;
  m.mse = 1.0 - m.accuracy;
  return m;
}

std::string format_metric_table(const MetricBlock& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "Indicators   Value\n"
                "Accuracy     %.4f\n"
                "Precision    %.4f\n"
                "Recall       %.4f\n"
                "F1-Score     %.4f\n"
                "MSE          %.4f\n",
                m.accuracy, m.precision, m.recall, m.f1, m.mse);
  return buf;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred,0,1,2\n";
  for (int t = 0; t < 3; ++t) {
    out += std::to_string(t);
    for (int p = 0; p < 3; ++p) out += "," + std::to_string(cm.counts(t, p));
    out += '\n';
  }
  return out;
}

}  // namespace fcdsae
