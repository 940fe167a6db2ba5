// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_METRICS_HPP
#define FCDSAE_METRICS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>

namespace fcdsae {

/// 3x3 counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, 3, 3> counts = Eigen::Matrix<std::int64_t, 3, 3>::Zero();

  std::int64_t total() const { return counts.sum(); }
  std::int64_t correct() const { return counts.trace(); }
  bool operator==(const ConfusionMatrix& o) const { return counts == o.counts; }
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

/// Support-weighted classification metrics. `mse` is the misclassification rate
/// 1 - accuracy, the quantity the published table reports under that name.
struct MetricBlock {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double mse = 0;
};

MetricBlock metric_block(const ConfusionMatrix& cm);

/// Aligned two-column table: Accuracy, Precision, Recall, F1-Score, MSE.
std::string format_metric_table(const MetricBlock& m);

/// "true\pred,0,1,2" header then one row per true class.
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace fcdsae

#endif  // FCDSAE_METRICS_HPP
