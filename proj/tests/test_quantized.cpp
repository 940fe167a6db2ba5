// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "fcdsae/quantized.hpp"
#include "support/oracles.hpp"

using namespace fcdsae;

namespace {

const QFormat kQ88{16, 8};

Standardizer identity_standardizer() { return Standardizer{}; }

Network zero_network() {
  const std::vector<int> topo{10, 4, 3};
  return Network::zeros(topo);
}

// 10 -> 3 layer copying the first three inputs.
Network pass_through() {
  Matrix<double> w = Matrix<double>::Zero(3, 10);
  w(0, 0) = w(1, 1) = w(2, 2) = 1.0;
  return Network({Network::Layer(w, Vector<double>::Zero(3))});
}

Network random_network(RandomSource& rng, std::vector<int> topo, double scale) {
  auto net = he_uniform<double>(topo, rng);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    net.layer(l).weights() *= scale;
    for (Eigen::Index i = 0; i < net.layer(l).biases().size(); ++i) net.layer(l).biases()(i) = rng.uniform(-0.2, 0.2);
  }
  return net;
}

}  // namespace

TEST_CASE("quantize_model preserves zeros") {
  const auto q = quantize_model(zero_network(), identity_standardizer(), kQ88);
  for (const auto& l : q.model.layers) {
    CHECK(l.weights.isZero());
    CHECK(l.biases.isZero());
  }
  CHECK(q.saturated == 0);
  CHECK(q.model.mean == std::array<std::int64_t, 10>{});
  // stddev 1.0 in the 32-bit, 8-fraction sensor format
  CHECK(q.model.stddev[0] == 256);
}

TEST_CASE("quantize_model identity layer and saturation count") {
  const Network id({Network::Layer(Matrix<double>::Identity(3, 3), Vector<double>::Zero(3))});
  const auto q = quantize_model(id, identity_standardizer(), kQ88);
  CHECK(q.model.layers[0].weights(0, 0) == 256);
  CHECK(q.model.layers[0].weights(1, 1) == 256);
  CHECK(q.model.layers[0].weights(0, 1) == 0);

  auto big = pass_through();
  big.layer(0).weights()(0, 5) = 300.0;
  const auto qb = quantize_model(big, identity_standardizer(), kQ88);
  CHECK(qb.saturated >= 1);
  CHECK(qb.model.layers[0].weights(0, 5) == 32767);
  CHECK_THROWS_AS(quantize_model(big, identity_standardizer(), QFormat{40, 8}), DomainError);
}

TEST_CASE("q_forward zero model and pass-through") {
  const auto qz = quantize_model(zero_network(), identity_standardizer(), kQ88).model;
  FeatureVector zeros{};
  auto fr = run_frame(qz, zeros);
  CHECK(fr.output == std::array<std::int64_t, 3>{0, 0, 0});
  CHECK(fr.predicted == 0);

  const auto qp = quantize_model(pass_through(), identity_standardizer(), kQ88).model;
  FeatureVector x{};
  x[0] = 0.5;
  fr = run_frame(qp, x);
  CHECK(fr.output[0] == 128);
  CHECK(fr.predicted == 0);
  x[2] = 0.75;
  CHECK(run_frame(qp, x).predicted == 2);
}

TEST_CASE("q_forward rejects malformed frames") {
  const auto qm = quantize_model(pass_through(), identity_standardizer(), kQ88).model;
  std::vector<std::int64_t> nine(9), eleven(11);
  CHECK_THROWS_AS(q_forward(qm, nine), FrameError);
  CHECK_THROWS_AS(q_forward(qm, eleven), FrameError);
}

TEST_CASE("q_forward equals the scalar oracle on random models and frames") {
  RandomSource rng(2718);
  const std::vector<QFormat> formats{{16, 8}, {8, 4}, {12, 3}, {32, 2}, {24, 12}, {4, 2}, {32, 16}};
  const std::vector<std::vector<int>> shapes{{32, 16}, {5}, {7, 4}, {}};
  for (int trial = 0; trial < 400; ++trial) {
    const auto& fmt = formats[rng.below(formats.size())];
    const auto qm = oracle::random_quantized_model(rng, fmt, shapes[rng.below(shapes.size())]);
    const auto sensor = fmt.sensor_format();
    for (int k = 0; k < 3; ++k) {
      std::array<std::int64_t, 10> in{};
      const std::int64_t span = std::int64_t(1) << std::min(41, sensor.total_bits - 1);
      for (auto& w : in) w = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * span))) - span;
      int want_class = -1;
      const auto want = oracle::scalar_q_forward(qm, in, &want_class);
      const auto got = q_forward(qm, in);
      REQUIRE(got.output == want);
      REQUIRE(got.predicted == want_class);
      for (auto w : got.output) {
        REQUIRE(w >= 0);  // ReLU output layer
        REQUIRE(w <= fmt.raw_max());
      }
    }
  }
}

TEST_CASE("dequantized network reproduces quantized words") {
  const auto qm = quantize_model(pass_through(), identity_standardizer(), kQ88).model;
  CHECK(dequantize_network(qm) == pass_through());
}

TEST_CASE("output error shrinks with the fraction width") {
  RandomSource rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_network(rng, {10, 8, 3}, 0.5);
    FeatureVector x{};
    for (auto& v : x) v = rng.uniform(-2, 2);
    Matrix<double> xm(1, 10);
    for (int j = 0; j < 10; ++j) xm(0, j) = x[j];
    const auto ref = forward(net, xm).output();
    std::array<double, 3> coarse{};
    for (int frac : {8, 16, 24}) {
      const QFormat fmt{8 + frac, 8};
      const auto qm = quantize_model(net, identity_standardizer(), fmt).model;
      const auto fr = run_frame(qm, x);
      for (int k = 0; k < 3; ++k) {
        const double err = std::abs(dequantize(fr.output[k], fmt) - ref(0, k));
        CAPTURE(frac);
        // Rounding of about 100 parameters and activations, each within half an lsb.
        REQUIRE(err <= 64 * fmt.lsb());
        if (frac == 8) coarse[static_cast<std::size_t>(k)] = err;
        if (frac == 24) REQUIRE(err <= coarse[static_cast<std::size_t>(k)] + fmt.lsb());
      }
    }
  }
}

TEST_CASE("evaluate_quantized with wide output margins matches the float model") {
  // Output k responds to feature k only, with a large gain, so the float and
  // fixed-point paths must agree whenever the winning input leads by > 0.5.
  Matrix<double> w = Matrix<double>::Zero(3, 10);
  w(0, 0) = w(1, 1) = w(2, 2) = 8.0;
  const Network net({Network::Layer(w, Vector<double>::Zero(3))});
  const Standardizer st;
  RandomSource rng(9);
  std::vector<LabeledExample> xs;
  while (xs.size() < 300) {
    LabeledExample e;
    for (auto& v : e.features) v = rng.uniform(-1, 3);
    std::array<double, 3> head{e.features[0], e.features[1], e.features[2]};
    std::sort(head.begin(), head.end());
    if (head[2] - head[1] < 0.5 || head[2] <= 0.5) continue;
    e.class_label = static_cast<int>(rng.below(3));
    xs.push_back(e);
  }
  const auto fe = evaluate(net, st, xs);
  const auto qm = quantize_model(net, st, kQ88).model;
  const auto qe = evaluate_quantized(qm, xs, fe.metrics.accuracy);
  CHECK(qe.eval.predictions == fe.predictions);
  REQUIRE(qe.accuracy_delta.has_value());
  CHECK(*qe.accuracy_delta == 0.0);
  CHECK(qe.frames.size() == xs.size());
}

TEST_CASE("frame dump has 13 integers per line") {
  const auto qm = quantize_model(pass_through(), identity_standardizer(), kQ88).model;
  std::vector<StreamFrame> frames;
  FeatureVector x{};
  x[0] = 1.0;
  x[9] = -2.5;
  frames.push_back(run_frame(qm, x));
  frames.push_back(run_frame(qm, FeatureVector{}));
  std::ostringstream out;
  write_frame_dump(out, frames);
  CHECK(out.str() == "256 0 0 0 0 0 0 0 0 -640 256 0 0\n0 0 0 0 0 0 0 0 0 0 0 0 0\n");
}
