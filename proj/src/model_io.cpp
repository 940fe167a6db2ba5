// SPDX-License-Identifier: Apache-2.0

#include "fcdsae/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fcdsae {

namespace {

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void put(std::string& out, std::int64_t v) { out += std::to_string(v); }

/// Line-oriented token reader with line numbers in its errors.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::vector<std::string> line() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_no_;
      std::istringstream ss(text);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    fail("unexpected end of file");
  }

  std::vector<std::string> expect(const char* keyword, std::size_t values) {
    auto t = line();
    if (t[0] != keyword) fail(std::string("expected ") + keyword + ", got '" + t[0] + "'");
    if (t.size() != values + 1)
      fail(std::string(keyword) + ": expected " + std::to_string(values) + " values, got " +
           std::to_string(t.size() - 1));
    return t;
  }

  template <typename T>
  T number(const std::string& s) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("model file line " + std::to_string(line_no_) + ": " + what, line_no_); }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

template <typename Layer, typename Emit>
void put_layer(std::string& out, const Layer& weights, const auto& biases, Activation act, Emit emit) {
  out += "LAYER " + std::to_string(weights.cols()) + ' ' + std::to_string(weights.rows());
  if (act == Activation::Linear) out += " linear";
  out += '\n';
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
      if (c) out += ' ';
      emit(out, weights(r, c));
    }
    out += '\n';
  }
  out += "BIAS";
  for (Eigen::Index r = 0; r < biases.size(); ++r) {
    out += ' ';
    emit(out, biases(r));
  }
  out += '\n';
}

struct LayerHeader {
  Eigen::Index fan_in = 0, fan_out = 0;
  Activation act = Activation::ReLU;
};

std::optional<LayerHeader> layer_header(Reader& rd, const std::vector<std::string>& t) {
  if (t[0] != "LAYER") return std::nullopt;
  if (t.size() != 3 && t.size() != 4) rd.fail("LAYER: expected fan_in fan_out [linear]");
  LayerHeader h{rd.number<Eigen::Index>(t[1]), rd.number<Eigen::Index>(t[2])};
  if (h.fan_in < 1 || h.fan_out < 1 || h.fan_in > 1 << 20 || h.fan_out > 1 << 20) rd.fail("LAYER: bad dimensions");
  if (t.size() == 4) {
    if (t[3] != "linear") rd.fail("LAYER: unknown activation '" + t[3] + "'");
    h.act = Activation::Linear;
  }
  return h;
}

template <typename T, typename M, typename V>
void read_layer_body(Reader& rd, const LayerHeader& h, M& w, V& b) {
  w.resize(h.fan_out, h.fan_in);
  b.resize(h.fan_out);
  for (Eigen::Index r = 0; r < h.fan_out; ++r) {
    const auto t = rd.line();
    if (static_cast<Eigen::Index>(t.size()) != h.fan_in)
      rd.fail("weight row: expected " + std::to_string(h.fan_in) + " values, got " + std::to_string(t.size()));
    for (Eigen::Index c = 0; c < h.fan_in; ++c) w(r, c) = rd.number<T>(t[static_cast<std::size_t>(c)]);
  }
  const auto t = rd.expect("BIAS", static_cast<std::size_t>(h.fan_out));
  for (Eigen::Index r = 0; r < h.fan_out; ++r) b(r) = rd.number<T>(t[static_cast<std::size_t>(r) + 1]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  return in;
}

}  // namespace

void save_model(std::ostream& out, const ModelFile& m) {
  std::string s = "FCDSAE 1\n";
  const auto emit = [](std::string& o, double v) { put(o, v); };
  for (const auto& l : m.params.layers()) put_layer(s, l.weights(), l.biases(), l.activation(), emit);
  s += "SPARSITY ";
  put(s, m.sparsity.xi);
  s += ' ';
  put(s, m.sparsity.psi);
  s += ' ';
  put(s, m.sparsity.clamp_eps);
  s += "\nMEAN";
  for (int j = 0; j < kNumFeatures; ++j) (s += ' ', put(s, m.standardizer.mean(j)));
  s += "\nSTD";
  for (int j = 0; j < kNumFeatures; ++j) (s += ' ', put(s, m.standardizer.stddev(j)));
  s += "\nSEED " + std::to_string(m.split_seed) + '\n';
  out << s;
}

ModelFile load_model(std::istream& in) {
  Reader rd(in);
  const auto head = rd.line();
  if (head.size() != 2 || head[0] != "FCDSAE" || head[1] != "1") rd.fail("expected header 'FCDSAE 1'");

  std::vector<Network::Layer> layers;
  auto t = rd.line();
  while (auto h = layer_header(rd, t)) {
    Matrix<double> w;
    Vector<double> b;
    read_layer_body<double>(rd, *h, w, b);
    layers.emplace_back(std::move(w), std::move(b), h->act);
    t = rd.line();
  }
  if (layers.empty()) rd.fail("no LAYER blocks");
  if (t[0] != "SPARSITY" || t.size() != 4) rd.fail("expected SPARSITY xi psi clamp_eps");
  SparsityConfig sp;
  sp.xi = rd.number<double>(t[1]);
  sp.psi = rd.number<double>(t[2]);
  sp.clamp_eps = rd.number<double>(t[3]);

  Standardizer st;
  const auto mean = rd.expect("MEAN", kNumFeatures);
  const auto sd = rd.expect("STD", kNumFeatures);
  for (int j = 0; j < kNumFeatures; ++j) {
    st.mean(j) = rd.number<double>(mean[static_cast<std::size_t>(j) + 1]);
    st.stddev(j) = rd.number<double>(sd[static_cast<std::size_t>(j) + 1]);
  }
  const auto seed = rd.expect("SEED", 1);
  try {
    return ModelFile{Network(std::move(layers)), st, sp, rd.number<std::uint64_t>(seed[1])};
  } catch (const DimensionError& e) {
    rd.fail(e.what());
  }
}

void save_quantized(std::ostream& out, const QuantizedModel& m) {
  std::string s = "FCDSAE-Q 1\nQ " + std::to_string(m.format.total_bits) + ' ' +
                  std::to_string(m.format.integer_bits) + '\n';
  const auto emit = [](std::string& o, std::int64_t v) { put(o, v); };
  for (const auto& l : m.layers) put_layer(s, l.weights, l.biases, l.activation, emit);
  s += "MEAN";
  for (auto v : m.mean) s += ' ' + std::to_string(v);
  s += "\nSTD";
  for (auto v : m.stddev) s += ' ' + std::to_string(v);
  s += "\nSEED " + std::to_string(m.split_seed) + '\n';
  out << s;
}

QuantizedModel load_quantized(std::istream& in) {
  Reader rd(in);
  const auto head = rd.line();
  if (head.size() != 2 || head[0] != "FCDSAE-Q" || head[1] != "1") rd.fail("expected header 'FCDSAE-Q 1'");
  QuantizedModel m;
  const auto q = rd.expect("Q", 2);
  m.format = QFormat{rd.number<int>(q[1]), rd.number<int>(q[2])};
  try {
    m.format.validate();
  } catch (const DomainError& e) {
    rd.fail(e.what());
  }

  auto t = rd.line();
  Eigen::Index prev_out = kNumFeatures;
  while (auto h = layer_header(rd, t)) {
    if (h->fan_in != prev_out) rd.fail("LAYER: fan_in does not match previous fan_out");
    QuantizedLayer l;
    l.activation = h->act;
    read_layer_body<std::int64_t>(rd, *h, l.weights, l.biases);
    if ((l.weights.array() > m.format.raw_max()).any() || (l.weights.array() < m.format.raw_min()).any() ||
        (l.biases.array() > m.format.raw_max()).any() || (l.biases.array() < m.format.raw_min()).any())
      rd.fail("raw word outside the " + m.format.to_string() + " range");
    prev_out = h->fan_out;
    m.layers.push_back(std::move(l));
    t = rd.line();
  }
  if (m.layers.empty()) rd.fail("no LAYER blocks");
  if (prev_out != kNumClasses) rd.fail("last layer must have 3 outputs");
  if (t[0] != "MEAN" || t.size() != kNumFeatures + 1) rd.fail("expected MEAN with 10 values");
  const auto sd = rd.expect("STD", kNumFeatures);
  for (int j = 0; j < kNumFeatures; ++j) {
    m.mean[j] = rd.number<std::int64_t>(t[static_cast<std::size_t>(j) + 1]);
    m.stddev[j] = rd.number<std::int64_t>(sd[static_cast<std::size_t>(j) + 1]);
    if (m.stddev[j] < 1) rd.fail("STD words must be positive");
  }
  m.split_seed = rd.number<std::uint64_t>(rd.expect("SEED", 1)[1]);
  return m;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  auto out = open_out(path);
  save_model(out, model);
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return load_model(in);
}

void save_quantized(const std::filesystem::path& path, const QuantizedModel& model) {
  auto out = open_out(path);
  save_quantized(out, model);
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

QuantizedModel load_quantized(const std::filesystem::path& path) {
  auto in = open_in(path);
  return load_quantized(in);
}

}  // namespace fcdsae
