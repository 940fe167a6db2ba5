// SPDX-License-Identifier: Apache-2.0

#ifndef FCDSAE_FIXED_POINT_HPP
#define FCDSAE_FIXED_POINT_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "fcdsae/errors.hpp"

namespace fcdsae {

using Wide = __int128;

/// Signed fixed-point format Qi.f with i integer bits (sign included) and
/// f = total - i fractional bits. Range [-2^(i-1), 2^(i-1) - 2^-f].
struct QFormat {
  int total_bits = 16;
  int integer_bits = 8;

  constexpr int fractional_bits() const { return total_bits - integer_bits; }
  constexpr std::int64_t raw_max() const { return static_cast<std::int64_t>((Wide(1) << (total_bits - 1)) - 1); }
  constexpr std::int64_t raw_min() const { return static_cast<std::int64_t>(-(Wide(1) << (total_bits - 1))); }
  double lsb() const { return std::ldexp(1.0, -fractional_bits()); }

  void validate() const {
    if (total_bits < 2 || total_bits > 32)
      throw DomainError("Q format: total bits must be in [2, 32], got " + std::to_string(total_bits));
    if (integer_bits < 1 || integer_bits >= total_bits)
      throw DomainError("Q format: integer bits must be in [1, total), got " + std::to_string(integer_bits));
  }

  /// Accumulator: twice the word width, same binary point shifted to 2f.
  constexpr int accumulator_bits() const { return 2 * total_bits; }

  /// Format of raw sensor words on the input stream: double width with the
  /// same fractional bits, so unscaled readings (hundreds of volts, sample
  /// indices in the tens of thousands) fit before standardization.
  QFormat sensor_format() const { return QFormat{2 * total_bits, 2 * total_bits - fractional_bits()}; }

  /// "Q8.8" style: integer bits, dot, fractional bits.
  static QFormat parse(std::string_view text);
  std::string to_string() const {
    return "Q" + std::to_string(integer_bits) + "." + std::to_string(fractional_bits());
  }

  bool operator==(const QFormat&) const = default;
};

inline QFormat QFormat::parse(std::string_view text) {
  const auto bad = [&] { return DomainError("invalid Q format '" + std::string(text) + "', expected e.g. Q8.8"); };
  if (text.size() < 4 || (text[0] != 'Q' && text[0] != 'q')) throw bad();
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) throw bad();
  const auto parse_int = [&](std::string_view s) {
    if (s.empty() || s.size() > 3) throw bad();
    int v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw bad();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  const int i = parse_int(text.substr(1, dot - 1));
  const int f = parse_int(text.substr(dot + 1));
  QFormat q{i + f, i};
  q.validate();
  return q;
}

/// Clamp to the signed range of `bits` (bits <= 64).
constexpr Wide saturate_bits(Wide v, int bits) {
  const Wide hi = (Wide(1) << (bits - 1)) - 1;
  const Wide lo = -(Wide(1) << (bits - 1));
  return v > hi ? hi : (v < lo ? lo : v);
}

/// v / 2^shift rounded to nearest, halves away from zero.
constexpr Wide round_shift(Wide v, int shift) {
  if (shift <= 0) return v << -shift;
  const Wide half = Wide(1) << (shift - 1);
  return v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
}

/// num / den rounded to nearest, halves away from zero. den != 0.
constexpr Wide round_div(Wide num, Wide den) {
  const bool neg = (num < 0) != (den < 0);
  const Wide n = num < 0 ? -num : num;
  const Wide d = den < 0 ? -den : den;
  const Wide q = (2 * n + d) / (2 * d);
  return neg ? -q : q;
}

/// Nearest multiple of 2^-f, halves away from zero, saturated to the format.
inline std::int64_t quantize(double x, const QFormat& fmt) {
  if (std::isnan(x)) return 0;
  const double scaled = std::round(std::ldexp(x, fmt.fractional_bits()));
  if (scaled >= static_cast<double>(fmt.raw_max())) return fmt.raw_max();
  if (scaled <= static_cast<double>(fmt.raw_min())) return fmt.raw_min();
  return static_cast<std::int64_t>(scaled);
}

inline double dequantize(std::int64_t raw, const QFormat& fmt) {
  return std::ldexp(static_cast<double>(raw), -fmt.fractional_bits());
}

}  // namespace fcdsae

#endif  // FCDSAE_FIXED_POINT_HPP
