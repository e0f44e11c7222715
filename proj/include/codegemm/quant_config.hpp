#pragma once

#include <cstddef>
#include <cstdint>

namespace codegemm {

inline constexpr std::int64_t kRowWiseGroup = -1;
inline constexpr int kDefaultKMeansIters = 25;

// Codebook quantization hyperparameters.
//   v: elements per vector, m: codebooks, b: bits per code,
//   g: elements sharing one scale (kRowWiseGroup = whole row).
struct QuantConfig {
  std::size_t v = 4;
  std::size_t m = 1;
  unsigned b = 8;
  std::int64_t g = kRowWiseGroup;
  std::uint64_t seed = 0;
  int kmeans_iters = kDefaultKMeansIters;

  std::size_t codebook_entries() const noexcept { return std::size_t{1} << b; }

  // Effective group width for a matrix with `cols` columns.
  std::size_t group_width(std::size_t cols) const noexcept {
    return g == kRowWiseGroup ? cols : static_cast<std::size_t>(g);
  }

  // Throws ConfigError unless v >= 1, m >= 1, 1 <= b <= 16, and g is -1 or a
  // multiple of v, and kmeans_iters >= 0.
  void validate() const;

  // validate() plus K mod v == 0 and K mod g == 0 for a rows x cols matrix.
  void validate_for(std::size_t rows, std::size_t cols) const;

  friend bool operator==(const QuantConfig&, const QuantConfig&) = default;
};

}  // namespace codegemm
