#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace codegemm {

// IEEE 754 binary16 bit pattern. Storage only; arithmetic widens to float.
struct Half {
  std::uint16_t bits = 0;

  friend bool operator==(Half, Half) = default;
};

inline constexpr Half kHalfQuietNaN{0x7E00};

// Round-to-nearest-even conversion. Overflow saturates to +-inf and every
// NaN input maps to kHalfQuietNaN.
Half f16_encode(double x) noexcept;
Half f16_encode(float x) noexcept;

// Exact value of the pattern.
double f16_decode(Half h) noexcept;

// Same value as f16_decode, via a lookup table. Use in hot loops.
float f16_to_float(Half h) noexcept;

bool f16_is_finite(Half h) noexcept;

void widen(std::span<const Half> in, std::span<float> out) noexcept;
std::vector<float> widen(std::span<const Half> in);

}  // namespace codegemm
