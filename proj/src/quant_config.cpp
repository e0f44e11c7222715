#include "codegemm/quant_config.hpp"

#include <string>

#include "codegemm/error.hpp"

namespace codegemm {

void QuantConfig::validate() const {
  if (v < 1) throw ConfigError("vector length v must be >= 1");
  if (v > 0xFFFF) throw ConfigError("vector length v must fit in 16 bits");
  if (m < 1) throw ConfigError("codebook count m must be >= 1");
  if (m > 0xFFFF) throw ConfigError("codebook count m must fit in 16 bits");
  if (b < 1 || b > 16) throw ConfigError("bits per code b must be in [1, 16], got " + std::to_string(b));
  if (g != kRowWiseGroup) {
    if (g < static_cast<std::int64_t>(v)) {
      throw ConfigError("group size g=" + std::to_string(g) + " is smaller than v=" + std::to_string(v));
    }
    if (g % static_cast<std::int64_t>(v) != 0) {
      throw ConfigError("group size g=" + std::to_string(g) + " is not a multiple of v=" + std::to_string(v));
    }
  }
  if (kmeans_iters < 0) throw ConfigError("kmeans_iters must be >= 0");
}

void QuantConfig::validate_for(std::size_t rows, std::size_t cols) const {
  validate();
  if (rows == 0 || cols == 0) throw ConfigError("matrix dimensions must be >= 1");
  if (cols % v != 0) {
    throw ConfigError("K=" + std::to_string(cols) + " is not divisible by v=" + std::to_string(v));
  }
  if (g != kRowWiseGroup && cols % static_cast<std::size_t>(g) != 0) {
    throw ConfigError("K=" + std::to_string(cols) + " is not divisible by g=" + std::to_string(g));
  }
}

}  // namespace codegemm
