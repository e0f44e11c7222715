#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "codegemm/op_counters.hpp"
#include "codegemm/quantizer.hpp"

namespace codegemm {

// All m codebooks widened to binary32, [t][code][k].
struct WideCodebooks {
  std::size_t count = 0;
  std::size_t entries = 0;
  std::size_t v = 0;
  std::vector<float> values;

  explicit WideCodebooks(std::span<const Codebook> books);

  const float* centroid(std::size_t t, std::size_t code) const noexcept {
    return values.data() + (t * entries + code) * v;
  }
};

// Partial sums p[t][j][i] = <centroid i of codebook t, input segment j> for
// one tile of one input column.
class Psumbook {
 public:
  Psumbook(std::size_t codebooks, std::size_t segments, std::size_t entries)
      : codebooks_(codebooks), segments_(segments), entries_(entries), values_(codebooks * segments * entries) {}

  std::size_t codebooks() const noexcept { return codebooks_; }
  std::size_t segments() const noexcept { return segments_; }
  std::size_t entries_per_segment() const noexcept { return entries_; }
  std::size_t size() const noexcept { return values_.size(); }

  float at(std::size_t t, std::size_t j, std::size_t i) const noexcept { return values_[offset(t, j) + i]; }

  // Contiguous 2^b partial sums for (codebook t, segment j).
  const float* slice(std::size_t t, std::size_t j) const noexcept { return values_.data() + offset(t, j); }
  float* slice(std::size_t t, std::size_t j) noexcept { return values_.data() + offset(t, j); }

 private:
  std::size_t offset(std::size_t t, std::size_t j) const noexcept { return (t * segments_ + j) * entries_; }

  std::size_t codebooks_;
  std::size_t segments_;
  std::size_t entries_;
  std::vector<float> values_;
};

// Each entry is a binary32 dot product accumulated from 0 in ascending k.
// Adds v MACs per entry to counters.mac_build. x_tile.size() must be a
// multiple of v.
Psumbook build_psumbook(std::span<const float> x_tile, const WideCodebooks& books, OpCounters& counters);
Psumbook build_psumbook(std::span<const float> x_tile, std::span<const Codebook> books, OpCounters& counters);

}  // namespace codegemm
