#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "codegemm/quantizer.hpp"

namespace codegemm {

// Row-major codes concatenated into one bitstream, each code written least
// significant bit first starting at the lowest unused bit of the current
// byte. The final byte is zero-padded.
std::vector<std::uint8_t> pack_codes(const CodePlane& plane, unsigned b);

CodePlane unpack_codes(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols, unsigned b);

// ceil(count * b / 8)
std::size_t packed_size(std::size_t count, unsigned b) noexcept;

}  // namespace codegemm
