#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "codegemm/quantizer.hpp"

namespace codegemm {

// CGMM layer container, all integers little-endian:
//
//   "CGMM" | u32 version = 1 | u64 M | u64 K | u16 v | u16 m | u8 b
//   | i64 g (-1 = row-wise) | u64 seed
//   | scales:      M * (K / g_eff) binary16, row-major
//   | codebooks:   for t in [0, m): 2^b * v binary16, centroid-major
//   | code planes: for t in [0, m): pack_codes(plane_t, b)
//
// Each code plane is padded to a whole byte on its own.
inline constexpr std::uint32_t kLayerVersion = 1;
inline constexpr std::size_t kLayerHeaderBytes = 4 + 4 + 8 + 8 + 2 + 2 + 1 + 8 + 8;

struct PayloadBits {
  std::uint64_t scale_bits = 0;
  std::uint64_t codebook_bits = 0;
  std::uint64_t code_bits = 0;     // b bits per code, padding excluded
  std::uint64_t padding_bits = 0;  // zero bits closing each code plane

  std::uint64_t payload() const noexcept { return scale_bits + codebook_bits + code_bits; }
};

PayloadBits payload_bits(const QuantizedLayer& q);

std::vector<std::uint8_t> encode_layer(const QuantizedLayer& q);

// Errors: FormatError with bad_magic, version_mismatch, truncated,
// trailing_bytes or invariant_violation (bad header fields, non-positive
// scales, non-finite centroids, codes >= 2^b).
QuantizedLayer decode_layer(std::span<const std::uint8_t> bytes);

void serialize(const QuantizedLayer& q, const std::filesystem::path& path);
QuantizedLayer deserialize(const std::filesystem::path& path);

}  // namespace codegemm
