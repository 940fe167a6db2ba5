// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "fcdsae/model_io.hpp"
#include "support/oracles.hpp"

using namespace fcdsae;

namespace {

ModelFile random_model(std::uint64_t seed) {
  RandomSource rng(seed);
  const std::vector<int> topo{10, 32, 16, 3};
  auto net = he_uniform<double>(topo, rng);
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    for (Eigen::Index i = 0; i < net.layer(l).biases().size(); ++i)
      net.layer(l).biases()(i) = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-300, 10));
  Standardizer st;
  for (int j = 0; j < kNumFeatures; ++j) {
    st.mean(j) = rng.uniform(-500, 500);
    st.stddev(j) = rng.uniform(1e-3, 1e4);
  }
  SparsityConfig sp;
  sp.xi = 0.1;
  sp.psi = 1.0 / 3.0;
  return ModelFile{net, st, sp, seed};
}

}  // namespace

TEST_CASE("float model round-trips exactly") {
  const auto m = random_model(12);
  std::stringstream ss;
  save_model(ss, m);
  CHECK(ss.str().rfind("FCDSAE 1\nLAYER 10 32\n", 0) == 0);
  const auto back = load_model(ss);
  CHECK(back.params == m.params);
  CHECK(back.standardizer.mean == m.standardizer.mean);
  CHECK(back.standardizer.stddev == m.standardizer.stddev);
  CHECK(back.sparsity.xi == m.sparsity.xi);
  CHECK(back.sparsity.psi == m.sparsity.psi);
  CHECK(back.split_seed == 12);

  std::stringstream again;
  save_model(again, back);
  CHECK(again.str() == ss.str());
}

TEST_CASE("linear layers keep their activation tag") {
  auto m = random_model(3);
  std::vector<Network::Layer> layers;
  for (const auto& l : m.params.layers()) layers.emplace_back(l.weights(), l.biases(), Activation::Linear);
  m.params = Network(std::move(layers));
  std::stringstream ss;
  save_model(ss, m);
  CHECK(load_model(ss).params == m.params);
}

TEST_CASE("float model load errors") {
  std::istringstream bad_header("FCDSAE 2\n");
  CHECK_THROWS_AS(load_model(bad_header), ParseError);

  std::stringstream ss;
  save_model(ss, random_model(1));
  const auto text = ss.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_model(truncated), ParseError);

  std::istringstream chain("FCDSAE 1\nLAYER 2 1\n1 2\nBIAS 0\nLAYER 3 1\n1 2 3\nBIAS 0\n"
                           "SPARSITY 0.05 0.001 1e-06\nMEAN 0 0 0 0 0 0 0 0 0 0\nSTD 1 1 1 1 1 1 1 1 1 1\nSEED 1\n");
  CHECK_THROWS_AS(load_model(chain), ParseError);

  std::istringstream word("FCDSAE 1\nLAYER 2 1\n1 x\nBIAS 0\n");
  CHECK_THROWS_AS(load_model(word), ParseError);

  CHECK_THROWS_AS(load_model(std::filesystem::path("/nonexistent/model.txt")), std::ios_base::failure);
}

TEST_CASE("quantized model round-trips exactly") {
  RandomSource rng(8);
  for (const QFormat fmt : {QFormat{16, 8}, QFormat{32, 2}, QFormat{8, 3}}) {
    auto qm = oracle::random_quantized_model(rng, fmt, {32, 16});
    qm.split_seed = 77;
    std::stringstream ss;
    save_quantized(ss, qm);
    CHECK(ss.str().rfind("FCDSAE-Q 1\nQ " + std::to_string(fmt.total_bits) + " " +
                             std::to_string(fmt.integer_bits) + "\nLAYER 10 32\n",
                         0) == 0);
    CHECK(load_quantized(ss) == qm);
  }
}

TEST_CASE("quantized model load rejects out-of-range words") {
  RandomSource rng(2);
  auto qm = oracle::random_quantized_model(rng, QFormat{16, 8}, {});
  std::stringstream ss;
  save_quantized(ss, qm);
  auto text = ss.str();
  const auto pos = text.find("LAYER 10 3\n") + 11;
  text.replace(pos, text.find(' ', pos) - pos, "40000");
  std::istringstream in(text);
  CHECK_THROWS_AS(load_quantized(in), ParseError);

  std::istringstream bad_q("FCDSAE-Q 1\nQ 16 0\n");
  CHECK_THROWS_AS(load_quantized(bad_q), ParseError);
}
