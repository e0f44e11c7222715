#include "codegemm/code_pack.hpp"

#include <string>

namespace codegemm {
namespace {

void check_width(unsigned b) {
  if (b < 1 || b > 16) throw ConfigError("code width must be in [1, 16]");
}

}  // namespace

std::size_t packed_size(std::size_t count, unsigned b) noexcept { return (count * b + 7) / 8; }

std::vector<std::uint8_t> pack_codes(const CodePlane& plane, unsigned b) {
  check_width(b);
  const std::uint32_t limit = std::uint32_t{1} << b;
  std::vector<std::uint8_t> out(packed_size(plane.size(), b), 0);
  std::size_t bit = 0;
  for (std::uint16_t code : plane.data()) {
    if (code >= limit) {
      throw InvariantError("code " + std::to_string(code) + " does not fit in " + std::to_string(b) + " bits");
    }
    // A code spans at most three bytes.
    std::uint32_t chunk = std::uint32_t{code} << (bit % 8);
    for (std::size_t byte = bit / 8; chunk != 0; ++byte, chunk >>= 8) {
      out[byte] |= static_cast<std::uint8_t>(chunk & 0xFF);
    }
    bit += b;
  }
  return out;
}

CodePlane unpack_codes(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols, unsigned b) {
  check_width(b);
  CodePlane plane(rows, cols);
  if (bytes.size() < packed_size(plane.size(), b)) {
    throw FormatError(FormatErrc::truncated, "packed code stream is too short");
  }
  const std::uint32_t mask = (std::uint32_t{1} << b) - 1;
  std::size_t bit = 0;
  for (auto& code : plane.data()) {
    const std::size_t first = bit / 8;
    std::uint32_t window = 0;
    for (std::size_t i = 0; i < 3 && first + i < bytes.size(); ++i) {
      window |= std::uint32_t{bytes[first + i]} << (8 * i);
    }
    code = static_cast<std::uint16_t>((window >> (bit % 8)) & mask);
    bit += b;
  }
  return plane;
}

}  // namespace codegemm
