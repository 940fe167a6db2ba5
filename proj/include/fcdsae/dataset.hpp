// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_DATASET_HPP
#define FCDSAE_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fcdsae/network.hpp"

namespace fcdsae {

inline constexpr int kNumFeatures = 10;
inline constexpr int kNumClasses = 3;

/// CSV header, in column order. The first ten columns form the feature vector.
inline constexpr std::array<const char*, 11> kCsvColumns = {
    "t",           "Power",     "CurrD",   "StaVol",     "Var", "WaterTempOut",
    "H2PressIn",   "HCPPower",  "AirPressIn", "AirFlow", "HFR"};

using FeatureVector = std::array<double, kNumFeatures>;

/// One row of stack telemetry with its measured high-frequency resistance.
struct SensorRecord {
  double t = 0;                      // s
  double power = 0;                  // kW
  double current_density = 0;        // mA/cm^2
  double stack_voltage = 0;          // V
  double cell_voltage_variance = 0;
  double water_temp_out = 0;         // deg C
  double h2_pressure_in = 0;         // kPaG
  double hcp_power = 0;
  double air_pressure_in = 0;        // kPaG
  double air_flow = 0;               // g/s
  double hfr = 0;                    // mOhm

  FeatureVector features() const {
    return {t, power, current_density, stack_voltage, cell_voltage_variance, water_temp_out,
            h2_pressure_in, hcp_power, air_pressure_in, air_flow};
  }

  bool operator==(const SensorRecord&) const = default;
};

struct LabeledExample {
  FeatureVector features{};
  int class_label = 0;
};

/// HFR < 89 -> 0, 89 <= HFR < 91 -> 1, HFR >= 91 -> 2.
int hfr_class(double hfr);

LabeledExample label(const SensorRecord& record);
std::vector<LabeledExample> label_all(std::span<const SensorRecord> records);

std::vector<SensorRecord> parse_csv(std::istream& in);
std::vector<SensorRecord> parse_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, std::span<const SensorRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records);

/// Per-feature population mean and standard deviation.
struct Standardizer {
  Vector<double> mean = Vector<double>::Zero(kNumFeatures);
  Vector<double> stddev = Vector<double>::Ones(kNumFeatures);

  FeatureVector apply(const FeatureVector& x) const;
  LabeledExample apply(const LabeledExample& e) const;
};

/// Zero-variance columns get stddev 1 so they pass through centered.
Standardizer fit_standardizer(std::span<const LabeledExample> train);

struct SplitDataset {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
};

std::size_t train_size_for(std::size_t n);

/// Seeded permutation; the first floor(0.75 N) examples go to training.
SplitDataset split(std::span<const LabeledExample> examples, std::uint64_t seed);

/// Permutation used by `split`, exposed for tests.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

struct SyntheticOptions {
  double noise_sigma = 0.2;
};

/// CSV-row-shaped synthetic telemetry with a smooth HFR response.
///
/// Each sensor value is uniform within +-10% of a nominal operating point; t is
/// the 1-based sample index. With u in [-1, 1] the relative offset of a sensor
/// and z = sqrt(3) u its unit-variance form,
///
///   HFR = 90 + 1.3 tanh(1.2 z_power - 0.8 z_airflow)
///            + 0.7 tanh(z_watertemp + 0.5 z_h2press) + N(0, sigma^2),
///
/// clipped to [85, 95].
std::vector<SensorRecord> generate_synthetic(std::size_t n, std::uint64_t seed,
                                             const SyntheticOptions& opts = {});

/// Nominal operating point the generator perturbs (sensor columns only, no t).
inline constexpr std::array<double, 9> kNominalSensors = {24.2, 222.4, 363.8, 83.0, 68.5,
                                                          165.5, 0.44, 145.6, 28.6};

/// Noise-free HFR response of the generator for a given record.
double synthetic_hfr_mean(const SensorRecord& record);

/// Feature rows, one per example, optionally standardized.
Matrix<double> feature_matrix(std::span<const LabeledExample> examples);
Matrix<double> one_hot(std::span<const LabeledExample> examples);
std::vector<int> labels_of(std::span<const LabeledExample> examples);

}  // namespace fcdsae

#endif  // FCDSAE_DATASET_HPP
