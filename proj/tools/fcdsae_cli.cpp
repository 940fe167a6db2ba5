// SPDX-License-Identifier: Apache-2.0
//
// fcdsae: generate data, train the sparse auto-encoder classifier, quantize it
// and run the fixed-point golden model.
//
// Exit codes: 0 success, 1 usage or validation error, 2 I/O or data error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fcdsae/dataset.hpp"
#include "fcdsae/metrics.hpp"
#include "fcdsae/model_io.hpp"
#include "fcdsae/quantized.hpp"
#include "fcdsae/trainer.hpp"

namespace {

using namespace fcdsae;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // gen-data
  std::size_t n = 0;
  std::string out;
  // train
  std::string data, out_model, out_report, out_curve;
  TrainConfig train;
  // quantize
  std::string model, format = "Q8.8";
  // eval
  std::string qmodel, dump_frames, out_confusion;
  bool all_rows = false;
  // infer
  std::string row;
  std::uint64_t seed = 42;
};

void class_distribution(std::ostream& os, std::span<const SensorRecord> records) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(hfr_class(r.hfr))];
  os << "class distribution:";
  for (int k = 0; k < kNumClasses; ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %d=%zu (%.2f%%)", k, counts[static_cast<std::size_t>(k)],
                  100.0 * static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(records.size()));
    os << buf;
  }
  os << '\n';
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  fn(out);
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

int run_gen_data(const Options& o) {
  if (o.n < 1) throw UsageError("--n must be >= 1");
  const auto records = generate_synthetic(o.n, o.seed);
  write_csv(std::filesystem::path(o.out), records);
  std::cout << "wrote " << records.size() << " rows to " << o.out << '\n';
  class_distribution(std::cout, records);
  return 0;
}

int run_train(Options o) {
  o.train.seed = o.seed;
  try {
    o.train.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const auto records = parse_csv(std::filesystem::path(o.data));
  if (records.size() < 4) throw ParseError("need at least 4 data rows, got " + std::to_string(records.size()));
  const auto data = split(label_all(records), o.train.seed);
  auto result = train(o.train, data);

  std::cout << "train " << data.train.size() << " / test " << data.test.size() << ", best epoch "
            << result.report.best_epoch << " of " << o.train.max_epochs << '\n'
            << format_metric_table(result.report.final_eval.metrics) << confusion_csv(result.report.final_eval.confusion);
  char buf[64];
  std::snprintf(buf, sizeof buf, "wall time: %.2f s\n", result.report.wall_seconds);
  std::cout << buf;

  save_model(std::filesystem::path(o.out_model),
             ModelFile{result.params, result.standardizer, o.train.sparsity, o.train.seed});
  if (!o.out_report.empty())
    write_file(o.out_report, [&](std::ostream& os) {
      write_report(os, result.report, o.train, data.train.size(), data.test.size());
    });
  if (!o.out_curve.empty())
    write_file(o.out_curve, [&](std::ostream& os) { write_curve_csv(os, result.report); });
  return 0;
}

QFormat parse_format(const std::string& text) {
  try {
    return QFormat::parse(text);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

int run_quantize(const Options& o) {
  const auto fmt = parse_format(o.format);
  const auto model = load_model(std::filesystem::path(o.model));
  const auto q = quantize_model(model.params, model.standardizer, fmt, model.split_seed);
  save_quantized(std::filesystem::path(o.out), q.model);
  std::cout << "format " << fmt.to_string() << ", saturated values: " << q.saturated << '\n';
  return 0;
}

int run_eval(const Options& o) {
  if (o.model.empty() && o.qmodel.empty()) throw UsageError("eval needs --model or --qmodel");
  std::optional<ModelFile> fm;
  std::optional<QuantizedModel> qm;
  if (!o.model.empty()) fm = load_model(std::filesystem::path(o.model));
  if (!o.qmodel.empty()) qm = load_quantized(std::filesystem::path(o.qmodel));
  const std::uint64_t seed = fm ? fm->split_seed : qm->split_seed;

  const auto examples = label_all(parse_csv(std::filesystem::path(o.data)));
  std::vector<LabeledExample> scored;
  if (o.all_rows) {
    scored = examples;
  } else {
    if (examples.size() < 4) throw ParseError("need at least 4 data rows to rebuild the test partition");
    scored = split(examples, seed).test;
  }
  if (scored.empty()) throw ParseError("no rows to evaluate");

  std::string report;
  std::optional<double> float_acc;
  ConfusionMatrix cm;
  if (fm) {
    const auto ev = evaluate(fm->params, fm->standardizer, scored);
    float_acc = ev.metrics.accuracy;
    cm = ev.confusion;
    report += "[float]\n" + format_metric_table(ev.metrics);
    char buf[64];
    std::snprintf(buf, sizeof buf, "Output MSE   %.6f\n", ev.output_mse);
    report += buf;
  }
  if (qm) {
    const auto qe = evaluate_quantized(*qm, scored, float_acc);
    cm = qe.eval.confusion;
    report += "[quantized " + qm->format.to_string() + "]\n" + format_metric_table(qe.eval.metrics);
    if (qe.accuracy_delta) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "Degradation  %+.4f points\n", 100.0 * *qe.accuracy_delta);
      report += buf;
    }
    if (!o.dump_frames.empty())
      write_file(o.dump_frames, [&](std::ostream& os) { write_frame_dump(os, qe.frames); });
  }
  report += confusion_csv(cm);
  std::cout << (o.all_rows ? "rows: all " : "rows: test partition ") << scored.size() << '\n' << report;
  if (!o.out_confusion.empty()) write_file(o.out_confusion, [&](std::ostream& os) { os << confusion_csv(cm); });
  return 0;
}

int run_infer(const Options& o) {
  const auto qm = load_quantized(std::filesystem::path(o.qmodel));
  std::vector<double> values;
  std::stringstream ss(o.row);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("--row: '" + cell + "' is not a number");
    }
  }
  if (values.size() != kFrameInputs)
    throw UsageError("--row needs " + std::to_string(kFrameInputs) + " values, got " + std::to_string(values.size()));
  FeatureVector features{};
  std::copy(values.begin(), values.end(), features.begin());
  const auto frame = run_frame(qm, features);
  std::cout << "class " << frame.predicted << "\noutputs " << frame.output[0] << ' ' << frame.output[1] << ' '
            << frame.output[2] << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuel-cell HFR health classifier: training and fixed-point golden model"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file", false);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic telemetry CSV");
  gen->add_option("--n", o.n, "Number of rows")->required();
  gen->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", o.out, "Output CSV path")->required();

  auto* tr = app.add_subcommand("train", "Train on a CSV and write the model");
  tr->add_option("--data", o.data, "Input CSV")->required();
  tr->add_option("--seed", o.seed, "Split, init and shuffle seed")->capture_default_str();
  tr->add_option("--epochs", o.train.max_epochs, "Epochs to run")->capture_default_str();
  tr->add_option("--lr", o.train.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch", o.train.batch_size, "Mini-batch size")->capture_default_str();
  tr->add_option("--xi", o.train.sparsity.xi, "Sparsity target")->capture_default_str();
  tr->add_option("--psi", o.train.sparsity.psi, "Sparsity weight")->capture_default_str();
  tr->add_option("--out-model", o.out_model, "Model file to write")->required();
  tr->add_option("--out-report", o.out_report, "Training report to write");
  tr->add_option("--out-curve", o.out_curve, "Per-epoch CSV to write");

  auto* qz = app.add_subcommand("quantize", "Convert a float model to fixed point");
  qz->add_option("--model", o.model, "Float model file")->required();
  qz->add_option("--format", o.format, "Fixed-point format, e.g. Q8.8")->capture_default_str();
  qz->add_option("--out", o.out, "Quantized model file to write")->required();

  auto* ev = app.add_subcommand("eval", "Score a float and/or quantized model");
  ev->add_option("--model", o.model, "Float model file");
  ev->add_option("--qmodel", o.qmodel, "Quantized model file");
  ev->add_option("--data", o.data, "CSV to score")->required();
  ev->add_flag("--all", o.all_rows, "Score every row instead of the recorded test partition");
  ev->add_option("--dump-frames", o.dump_frames, "Write quantized frame dump");
  ev->add_option("--out-confusion", o.out_confusion, "Write confusion matrix CSV");

  auto* inf = app.add_subcommand("infer", "Classify one row with the fixed-point model");
  inf->add_option("--qmodel", o.qmodel, "Quantized model file")->required();
  inf->add_option("--row", o.row, "Ten comma-separated sensor values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return run_gen_data(o);
    if (*tr) return run_train(o);
    if (*qz) return run_quantize(o);
    if (*ev) return run_eval(o);
    if (*inf) return run_infer(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
