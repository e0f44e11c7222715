#pragma once

#include <cstddef>

#include "codegemm/grid.hpp"
#include "codegemm/op_counters.hpp"
#include "codegemm/psumbook.hpp"
#include "codegemm/quantizer.hpp"

namespace codegemm {

// Tile extent for the Psumbook engine: `width` elements along K share one
// Psumbook, `height` output rows form one unit of parallel work.
struct TileConfig {
  std::size_t width = 32;
  std::size_t height = 2048;

  // width is a positive multiple of v, height >= 1, and a tile either sits
  // inside one scale group or covers whole groups.
  void validate(const QuantConfig& cfg) const;
};

enum class DequantOrder {
  naive,     // reconstruct W_hat in binary16, then dense binary32 GEMM
  mirrored,  // the Psumbook engine's floating-point sequence without the table
};

struct GemmResult {
  Grid<float> y;
  OpCounters counters;
  std::size_t psumbook_entries = 0;  // entries of one full-width tile's table
  std::size_t psumbooks_built = 0;
};

// Y = W X with W rows x K and X K x N, accumulated in Acc (float or double)
// in ascending k. Adds rows*K*N to counters->mac_dense.
template <class Acc>
Grid<Acc> dense_gemm(const Matrix& w, const Matrix& x, OpCounters* counters = nullptr, int threads = 0);

extern template Grid<float> dense_gemm<float>(const Matrix&, const Matrix&, OpCounters*, int);
extern template Grid<double> dense_gemm<double>(const Matrix&, const Matrix&, OpCounters*, int);

GemmResult dequant_gemm(const QuantizedLayer& q, const Matrix& x, DequantOrder order, int threads = 0);

// Lookup-based GEMM. For every input column and K-tile it builds one
// Psumbook, then each row fetches m partial sums per segment by code, sums
// them over codebooks, scales by the segment's group scale and accumulates
// in ascending segment order. The result is bit-identical to
// dequant_gemm(q, x, DequantOrder::mirrored) and does not depend on
// tiles.height or the worker count.
GemmResult codegemm_gemm(const QuantizedLayer& q, const Matrix& x, const TileConfig& tiles = {}, int threads = 0);

}  // namespace codegemm
