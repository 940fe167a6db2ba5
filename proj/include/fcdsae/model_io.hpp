// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_MODEL_IO_HPP
#define FCDSAE_MODEL_IO_HPP

#include <filesystem>
#include <iosfwd>

#include "fcdsae/quantized.hpp"
#include "fcdsae/trainer.hpp"

namespace fcdsae {

/// Everything needed to score raw sensor rows with a trained float model.
struct ModelFile {
  Network params;
  Standardizer standardizer;
  SparsityConfig sparsity;
  std::uint64_t split_seed = 0;
};

// Float model text format:
//
//   FCDSAE 1
//   LAYER <fan_in> <fan_out> [linear]
//   <fan_out lines of fan_in weights, row-major>
//   BIAS <fan_out values>
//   ... one block per layer ...
//   SPARSITY <xi> <psi> <clamp_eps>
//   MEAN <10 values>
//   STD <10 values>
//   SEED <split seed>
//
// Reals are written with %.17g and round-trip exactly.
void save_model(std::ostream& out, const ModelFile& model);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::filesystem::path& path);

// Quantized model: header "FCDSAE-Q 1", then "Q <total> <int>", then the same
// LAYER/BIAS layout holding raw integer words, then MEAN/STD as raw
// sensor-format words and SEED.
void save_quantized(std::ostream& out, const QuantizedModel& model);
void save_quantized(const std::filesystem::path& path, const QuantizedModel& model);
QuantizedModel load_quantized(std::istream& in);
QuantizedModel load_quantized(const std::filesystem::path& path);

}  // namespace fcdsae

#endif  // FCDSAE_MODEL_IO_HPP
