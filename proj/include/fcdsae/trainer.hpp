// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_TRAINER_HPP
#define FCDSAE_TRAINER_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fcdsae/dataset.hpp"
#include "fcdsae/metrics.hpp"
#include "fcdsae/network.hpp"
#include "fcdsae/sparsity.hpp"

namespace fcdsae {

using Network = NetworkParams<double>;

struct TrainConfig {
  std::vector<int> topology{10, 32, 16, 3};
  double lr = 0.001;
  int batch_size = 64;
  int max_epochs = 15;
  std::uint64_t seed = 42;
  SparsityConfig sparsity;

  void validate() const;
};

/// Predictions and scores of a model over a labeled set.
struct Evaluation {
  ConfusionMatrix confusion;
  MetricBlock metrics;
  /// Mean squared error between the raw 3-wide output and the one-hot targets.
  double output_mse = 0;
  std::vector<int> predictions;
};

struct TrainReport {
  std::vector<double> train_accuracy;
  std::vector<double> val_accuracy;
  std::vector<double> j_total;
  std::vector<double> mse;  // one-hot output MSE on the training partition
  int best_epoch = 0;       // 1-based epoch with the highest validation accuracy
  Evaluation final_eval;    // on the test partition, using the best-epoch parameters
  double wall_seconds = 0;  // kept out of the serialized report
};

struct TrainResult {
  Network params;
  Standardizer standardizer;
  TrainReport report;
};

/// Standardize with training statistics, run exactly `max_epochs` epochs of
/// shuffled mini-batch Adam on J_total, and keep the best-validation epoch.
///
/// The test partition doubles as the validation set. Throws NumericError if the
/// loss becomes non-finite.
TrainResult train(const TrainConfig& cfg, const SplitDataset& data);

/// Class with the largest output; ties (including all-zero output) go to the
/// lowest index.
int predict(const Network& params, const Standardizer& std, const SensorRecord& record);
int predict_standardized(const Network& params, const FeatureVector& z);

/// Examples are raw (unstandardized) features.
Evaluation evaluate(const Network& params, const Standardizer& std, std::span<const LabeledExample> examples);

/// Average post-ReLU activation over every hidden unit and every example.
double mean_hidden_activation(const Network& params, const Standardizer& std,
                              std::span<const LabeledExample> examples);

/// Key/value text report plus a reproducibility line.
void write_report(std::ostream& out, const TrainReport& report, const TrainConfig& cfg,
                  std::size_t n_train, std::size_t n_test);

/// epoch,train_acc,val_acc,mse
void write_curve_csv(std::ostream& out, const TrainReport& report);

std::string reproducibility_line(const TrainConfig& cfg);

}  // namespace fcdsae

#endif  // FCDSAE_TRAINER_HPP
