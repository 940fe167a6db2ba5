// SPDX-License-Identifier: Apache-2.0

#include "fcdsae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fcdsae {

namespace {

std::vector<LabeledExample> standardize_all(const Standardizer& s, std::span<const LabeledExample> xs) {
  std::vector<LabeledExample> out;
  out.reserve(xs.size());
  for (const auto& e : xs) out.push_back(s.apply(e));
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// NaN or inf anywhere in the trace would otherwise surface as a domain error
// from the KL term instead of a divergence report.
double checked_loss(const ForwardTrace<double>& trace, const Matrix<double>& y, const SparsityConfig& cfg) {
  for (const auto& h : trace.post)
    if (!h.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  return total_loss(trace, y, cfg);
}

double accuracy_of(const Network& params, const Matrix<double>& x, std::span<const int> labels) {
  const auto out = forward(params, x).output();
  std::int64_t correct = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) correct += argmax(out.row(i)) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(out.rows());
}

Evaluation evaluate_standardized(const Network& params, const Matrix<double>& x,
                                 std::span<const LabeledExample> examples) {
  Evaluation ev;
  const auto out = forward(params, x).output();
  ev.predictions.reserve(examples.size());
  for (Eigen::Index i = 0; i < out.rows(); ++i) ev.predictions.push_back(argmax(out.row(i)));
  const auto truth = labels_of(examples);
  ev.confusion = confusion(truth, ev.predictions);
  if (!examples.empty()) {
    ev.metrics = metric_block(ev.confusion);
    ev.output_mse = mse_loss<double>(out, one_hot(examples));
  }
  return ev;
}

}  // namespace

void TrainConfig::validate() const {
  if (topology.size() < 2 || topology.front() != kNumFeatures || topology.back() != kNumClasses)
    throw DomainError("topology must start at 10 inputs and end at 3 outputs");
  for (int w : topology)
    if (w < 1) throw DomainError("topology widths must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("learning rate must be positive");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (max_epochs < 1) throw DomainError("max epochs must be >= 1");
  sparsity.validate();
}

TrainResult train(const TrainConfig& cfg, const SplitDataset& data) {
  cfg.validate();
  if (data.train.empty() || data.test.empty()) throw DomainError("train: empty partition");
  const auto t0 = std::chrono::steady_clock::now();

  const auto standardizer = fit_standardizer(data.train);
  const auto train_set = standardize_all(standardizer, data.train);
  const auto test_set = standardize_all(standardizer, data.test);
  const Matrix<double> x_train = feature_matrix(train_set);
  const Matrix<double> y_train = one_hot(train_set);
  const Matrix<double> x_test = feature_matrix(test_set);
  const auto train_labels = labels_of(train_set);
  const auto test_labels = labels_of(test_set);

  RandomSource rng(cfg.seed);
  Network params = he_uniform<double>(cfg.topology, rng);
  AdamState<double> adam(params, cfg.lr);

  TrainReport report;
  Network best = params;
  double best_val = -1.0;

  const auto n = static_cast<Eigen::Index>(train_set.size());
  const Eigen::Index width = kNumFeatures;
  Matrix<double> xb, yb;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto perm = rng.permutation(train_set.size());
    for (Eigen::Index start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const Eigen::Index p = std::min<Eigen::Index>(cfg.batch_size, n - start);
      xb.resize(p, width);
      yb.resize(p, kNumClasses);
      for (Eigen::Index i = 0; i < p; ++i) {
        const auto src = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(start + i)]);
        xb.row(i) = x_train.row(src);
        yb.row(i) = y_train.row(src);
      }
      const auto trace = forward(params, xb);
      const double loss = checked_loss(trace, yb, cfg.sparsity);
      if (!std::isfinite(loss))
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ": loss is not finite");
      const auto hidden = sparsity_gradients(trace, cfg.sparsity);
      const auto grads = backward<double>(trace, params, yb, hidden);
      adam_step(params, grads, adam);
    }

    const auto full = forward(params, x_train);
    const double j = checked_loss(full, y_train, cfg.sparsity);
    if (!std::isfinite(j))
      throw NumericError("training diverged at end of epoch " + std::to_string(epoch));
    report.j_total.push_back(j);
    report.mse.push_back(mse_loss<double>(full.output(), y_train));
    std::int64_t correct = 0;
    for (Eigen::Index i = 0; i < full.output().rows(); ++i)
      correct += argmax(full.output().row(i)) == train_labels[static_cast<std::size_t>(i)];
    report.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
    const double val = accuracy_of(params, x_test, test_labels);
    report.val_accuracy.push_back(val);
    if (val > best_val) {
      best_val = val;
      best = params;
      report.best_epoch = epoch;
    }
  }

  report.final_eval = evaluate_standardized(best, x_test, test_set);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), standardizer, std::move(report)};
}

int predict_standardized(const Network& params, const FeatureVector& z) {
  Matrix<double> x(1, kNumFeatures);
  for (int j = 0; j < kNumFeatures; ++j) x(0, j) = z[j];
  return argmax(forward(params, x).output().row(0));
}

int predict(const Network& params, const Standardizer& std, const SensorRecord& record) {
  return predict_standardized(params, std.apply(record.features()));
}

Evaluation evaluate(const Network& params, const Standardizer& std, std::span<const LabeledExample> examples) {
  const auto z = standardize_all(std, examples);
  return evaluate_standardized(params, feature_matrix(z), z);
}

double mean_hidden_activation(const Network& params, const Standardizer& std,
                              std::span<const LabeledExample> examples) {
  const auto trace = forward(params, feature_matrix(standardize_all(std, examples)));
  double sum = 0;
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < trace.post.size(); ++l) {
    sum += trace.post[l].sum();
    count += trace.post[l].size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

std::string reproducibility_line(const TrainConfig& cfg) {
  std::string topo;
  for (std::size_t i = 0; i < cfg.topology.size(); ++i) topo += (i ? "-" : "") + std::to_string(cfg.topology[i]);
  return "repro: topology=" + topo + " lr=" + fmt17(cfg.lr) + " batch=" + std::to_string(cfg.batch_size) +
         " epochs=" + std::to_string(cfg.max_epochs) + " seed=" + std::to_string(cfg.seed) +
         " xi=" + fmt17(cfg.sparsity.xi) + " psi=" + fmt17(cfg.sparsity.psi) +
         " clamp_eps=" + fmt17(cfg.sparsity.clamp_eps);
}

void write_report(std::ostream& out, const TrainReport& report, const TrainConfig& cfg, std::size_t n_train,
                  std::size_t n_test) {
  const auto& m = report.final_eval.metrics;
  out << "# DSAE training report\n"
      << "train_examples: " << n_train << '\n'
      << "test_examples: " << n_test << '\n'
      << "validation_set: test partition\n"
      << "epochs_run: " << report.val_accuracy.size() << '\n'
      << "best_epoch: " << report.best_epoch << '\n';
  const auto series = [&](const char* key, const std::vector<double>& v) {
    out << key << ':';
    for (double x : v) out << ' ' << fmt17(x);
    out << '\n';
  };
  series("train_accuracy", report.train_accuracy);
  series("val_accuracy", report.val_accuracy);
  series("j_total", report.j_total);
  series("train_mse", report.mse);
  out << "accuracy: " << fmt17(m.accuracy) << '\n'
      << "precision: " << fmt17(m.precision) << '\n'
      << "recall: " << fmt17(m.recall) << '\n'
      << "f1: " << fmt17(m.f1) << '\n'
      << "mse: " << fmt17(m.mse) << '\n'
      << "output_mse: " << fmt17(report.final_eval.output_mse) << '\n'
      << "sparsity: xi=" << fmt17(cfg.sparsity.xi) << " psi=" << fmt17(cfg.sparsity.psi)
      << " clamp_eps=" << fmt17(cfg.sparsity.clamp_eps) << '\n'
      << "confusion:\n"
      << confusion_csv(report.final_eval.confusion) << reproducibility_line(cfg) << '\n';
}

void write_curve_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,train_acc,val_acc,mse\n";
  for (std::size_t e = 0; e < report.val_accuracy.size(); ++e)
    out << (e + 1) << ',' << fmt17(report.train_accuracy[e]) << ',' << fmt17(report.val_accuracy[e]) << ','
        << fmt17(report.mse[e]) << '\n';
}

}  // namespace fcdsae
