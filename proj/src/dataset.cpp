// SPDX-License-Identifier: Apache-2.0

#include "fcdsae/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <algorithm>

namespace fcdsae {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row, const char* column) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError("row " + std::to_string(row) + ", column \"" + column + "\": '" +
                         std::string(field) + "' is not a number",
                     row, column);
  if (!std::isfinite(v))
    throw ParseError("row " + std::to_string(row) + ", column \"" + column + "\": non-finite value",
                     row, column);
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

int hfr_class(double hfr) {
  if (hfr < 89.0) return 0;
  if (hfr < 91.0) return 1;
  return 2;
}

LabeledExample label(const SensorRecord& record) { return {record.features(), hfr_class(record.hfr)}; }

std::vector<LabeledExample> label_all(std::span<const SensorRecord> records) {
  std::vector<LabeledExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(label(r));
  return out;
}

std::vector<SensorRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw ParseError("empty file: missing header row", 1);

  const auto header = split_fields(line);
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c >= header.size() || header[c] != kCsvColumns[c])
      throw ParseError(std::string("header: missing column \"") + kCsvColumns[c] + "\" at position " +
                           std::to_string(c + 1),
                       1, kCsvColumns[c]);
  }
  if (header.size() != kCsvColumns.size())
    throw ParseError("header: expected " + std::to_string(kCsvColumns.size()) + " columns, got " +
                         std::to_string(header.size()),
                     1);

  std::vector<SensorRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != kCsvColumns.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(kCsvColumns.size()) + " fields, got " + std::to_string(f.size()),
                       row);
    std::array<double, 11> v{};
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = parse_number(f[c], row, kCsvColumns[c]);
    if (!(v[10] > 0.0))
      throw ParseError("row " + std::to_string(row) + ", column \"HFR\": must be positive", row, "HFR");
    records.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
  }
  return records;
}

std::vector<SensorRecord> parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(std::ostream& out, std::span<const SensorRecord> records) {
  std::string buf;
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c) buf += ',';
    buf += kCsvColumns[c];
  }
  buf += '\n';
  for (const auto& r : records) {
    const auto f = r.features();
    for (double v : f) {
      append_double(buf, v);
      buf += ',';
    }
    append_double(buf, r.hfr);
    buf += '\n';
  }
  out << buf;
}

void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  write_csv(out, records);
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

FeatureVector Standardizer::apply(const FeatureVector& x) const {
  FeatureVector z{};
  for (int j = 0; j < kNumFeatures; ++j) z[j] = (x[j] - mean(j)) / stddev(j);
  return z;
}

LabeledExample Standardizer::apply(const LabeledExample& e) const { return {apply(e.features), e.class_label}; }

Standardizer fit_standardizer(std::span<const LabeledExample> train) {
  if (train.empty()) throw DomainError("fit_standardizer: empty training set");
  const auto n = static_cast<double>(train.size());
  Standardizer s;
  s.mean.setZero();
  for (const auto& e : train)
    for (int j = 0; j < kNumFeatures; ++j) s.mean(j) += e.features[j];
  s.mean /= n;
  Vector<double> var = Vector<double>::Zero(kNumFeatures);
  for (const auto& e : train)
    for (int j = 0; j < kNumFeatures; ++j) {
      const double d = e.features[j] - s.mean(j);
      var(j) += d * d;
    }
  for (int j = 0; j < kNumFeatures; ++j) {
    const double sd = std::sqrt(var(j) / n);
    s.stddev(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::size_t train_size_for(std::size_t n) { return n * 3 / 4; }

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
  RandomSource rng(seed);
  return rng.permutation(n);
}

SplitDataset split(std::span<const LabeledExample> examples, std::uint64_t seed) {
  if (examples.size() < 4)
    throw DomainError("split: need at least 4 examples, got " + std::to_string(examples.size()));
  const auto perm = split_permutation(examples.size(), seed);
  const auto n_train = train_size_for(examples.size());
  SplitDataset out;
  out.seed = seed;
  out.train.reserve(n_train);
  out.test.reserve(examples.size() - n_train);
  for (std::size_t i = 0; i < perm.size(); ++i)
    (i < n_train ? out.train : out.test).push_back(examples[perm[i]]);
  return out;
}

double synthetic_hfr_mean(const SensorRecord& r) {
  const auto z = [](double x, double nominal) { return std::sqrt(3.0) * (x / nominal - 1.0) / 0.1; };
  const double z_power = z(r.power, kNominalSensors[0]);
  const double z_water = z(r.water_temp_out, kNominalSensors[4]);
  const double z_h2 = z(r.h2_pressure_in, kNominalSensors[5]);
  const double z_air = z(r.air_flow, kNominalSensors[8]);
  return 90.0 + 1.3 * std::tanh(1.2 * z_power - 0.8 * z_air) + 0.7 * std::tanh(z_water + 0.5 * z_h2);
}

std::vector<SensorRecord> generate_synthetic(std::size_t n, std::uint64_t seed, const SyntheticOptions& opts) {
  if (n == 0) throw DomainError("generate_synthetic: n must be >= 1");
  RandomSource rng(seed);
  std::vector<SensorRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 9> x{};
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = kNominalSensors[j] * (1.0 + 0.1 * rng.uniform(-1.0, 1.0));
    SensorRecord r{static_cast<double>(i + 1), x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], 0.0};
    const double noise = rng.normal();  // always drawn, so sigma does not shift the stream
    r.hfr = std::clamp(synthetic_hfr_mean(r) + opts.noise_sigma * noise, 85.0, 95.0);
    out.push_back(r);
  }
  return out;
}

Matrix<double> feature_matrix(std::span<const LabeledExample> examples) {
  Matrix<double> m(static_cast<Eigen::Index>(examples.size()), kNumFeatures);
  for (std::size_t i = 0; i < examples.size(); ++i)
    for (int j = 0; j < kNumFeatures; ++j) m(static_cast<Eigen::Index>(i), j) = examples[i].features[j];
  return m;
}

Matrix<double> one_hot(std::span<const LabeledExample> examples) {
  Matrix<double> m = Matrix<double>::Zero(static_cast<Eigen::Index>(examples.size()), kNumClasses);
  for (std::size_t i = 0; i < examples.size(); ++i) m(static_cast<Eigen::Index>(i), examples[i].class_label) = 1.0;
  return m;
}

std::vector<int> labels_of(std::span<const LabeledExample> examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.class_label);
  return out;
}

}  // namespace fcdsae
