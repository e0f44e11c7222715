#include "codegemm/half.hpp"

#include <array>
#include <bit>
#include <cmath>

#include "codegemm/grid.hpp"

namespace codegemm {
namespace {

// Correctly rounded narrowing of an IEEE binary format with the given
// mantissa width and exponent bias to binary16.
template <class UInt, int kMantBits, int kExpBits>
std::uint16_t narrow_to_half(UInt bits) noexcept {
  constexpr int kBias = (1 << (kExpBits - 1)) - 1;
  constexpr UInt kMantMask = (UInt{1} << kMantBits) - 1;
  constexpr UInt kExpMask = (UInt{1} << kExpBits) - 1;

  const auto sign = static_cast<std::uint16_t>((bits >> (kMantBits + kExpBits)) << 15);
  const UInt exp_field = (bits >> kMantBits) & kExpMask;
  const UInt mant = bits & kMantMask;

  if (exp_field == kExpMask) {
    return mant != 0 ? kHalfQuietNaN.bits : static_cast<std::uint16_t>(sign | 0x7C00);
  }
  if (exp_field == 0) {
    // Source subnormals are far below half's smallest subnormal.
    return sign;
  }
  const int e = static_cast<int>(exp_field) - kBias;
  if (e > 15) {
    return static_cast<std::uint16_t>(sign | 0x7C00);
  }

  UInt significand = mant;
  int shift = kMantBits - 10;
  std::uint32_t base = static_cast<std::uint32_t>(e + 15) << 10;
  if (e < -14) {
    // Half subnormal: value / 2^-24 = significand * 2^(e - kMantBits + 24).
    significand = mant | (UInt{1} << kMantBits);
    shift = kMantBits - 24 - e;
    base = 0;
    if (shift >= static_cast<int>(sizeof(UInt) * 8)) {
      return sign;
    }
  }
  const UInt kept = significand >> shift;
  const UInt rem = significand & ((UInt{1} << shift) - 1);
  const UInt halfway = UInt{1} << (shift - 1);
  const bool up = rem > halfway || (rem == halfway && (kept & 1u));
  // A carry out of the mantissa bumps the exponent, up to +inf.
  return static_cast<std::uint16_t>(sign | (base + static_cast<std::uint32_t>(kept) + (up ? 1u : 0u)));
}

double decode_exact(std::uint16_t bits) noexcept {
  const bool negative = (bits & 0x8000) != 0;
  const int exp_field = (bits >> 10) & 0x1F;
  const int mant = bits & 0x3FF;
  double value;
  if (exp_field == 0) {
    value = std::ldexp(static_cast<double>(mant), -24);
  } else if (exp_field == 31) {
    value = mant == 0 ? INFINITY : NAN;
  } else {
    value = std::ldexp(static_cast<double>(mant | 0x400), exp_field - 25);
  }
  return negative ? -value : value;
}

const std::array<float, 65536>& decode_table() {
  static const auto table = [] {
    std::array<float, 65536> t{};
    for (std::uint32_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<float>(decode_exact(static_cast<std::uint16_t>(i)));
    }
    return t;
  }();
  return table;
}

}  // namespace

Half f16_encode(double x) noexcept {
  return Half{narrow_to_half<std::uint64_t, 52, 11>(std::bit_cast<std::uint64_t>(x))};
}

Half f16_encode(float x) noexcept {
  return Half{narrow_to_half<std::uint32_t, 23, 8>(std::bit_cast<std::uint32_t>(x))};
}

double f16_decode(Half h) noexcept { return decode_exact(h.bits); }

float f16_to_float(Half h) noexcept { return decode_table()[h.bits]; }

bool f16_is_finite(Half h) noexcept { return (h.bits & 0x7C00) != 0x7C00; }

void widen(std::span<const Half> in, std::span<float> out) noexcept {
  const auto& table = decode_table();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = table[in[i].bits];
  }
}

std::vector<float> widen(std::span<const Half> in) {
  std::vector<float> out(in.size());
  widen(in, out);
  return out;
}

Matrix to_half(const Grid<float>& m) {
  std::vector<Half> data(m.size());
  auto src = m.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = f16_encode(src[i]);
  return Matrix(m.rows(), m.cols(), std::move(data));
}

Matrix to_half(const Grid<double>& m) {
  std::vector<Half> data(m.size());
  auto src = m.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = f16_encode(src[i]);
  return Matrix(m.rows(), m.cols(), std::move(data));
}

Grid<float> to_float(const Matrix& m) { return Grid<float>(m.rows(), m.cols(), widen(m.data())); }

}  // namespace codegemm
