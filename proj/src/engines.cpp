#include "codegemm/engines.hpp"

#include <algorithm>
#include <string>

#include "codegemm/parallel.hpp"

namespace codegemm {
namespace {

void check_input(const QuantizedLayer& q, const Matrix& x) {
  if (x.rows() != q.cols) {
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows but the layer has K=" + std::to_string(q.cols));
  }
}

// Column c of X, widened.
std::vector<float> input_column(const Matrix& x, std::size_t c) {
  std::vector<float> col(x.rows());
  for (std::size_t k = 0; k < x.rows(); ++k) col[k] = f16_to_float(x(k, c));
  return col;
}

struct TileSpan {
  std::size_t begin;
  std::size_t width;
};

std::vector<TileSpan> k_tiles(std::size_t k, std::size_t width) {
  std::vector<TileSpan> out;
  for (std::size_t begin = 0; begin < k; begin += width) out.push_back({begin, std::min(width, k - begin)});
  return out;
}

GemmResult mirrored_dequant(const QuantizedLayer& q, const Matrix& x, int threads) {
  const std::size_t v = q.config.v;
  const std::size_t m = q.config.m;
  const std::size_t segments = q.segments_per_row();
  const WideCodebooks books(q.books);
  const Grid<float> scales = to_float(q.scales);

  GemmResult result{Grid<float>(q.rows, x.cols()), {}, 0, 0};
  std::uint64_t macs = 0;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const std::vector<float> xc = input_column(x, c);
    const auto rows = static_cast<std::ptrdiff_t>(q.rows);
#pragma omp parallel for num_threads(threads) schedule(static) reduction(+ : macs)
    for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      float acc = 0.0f;
      for (std::size_t j = 0; j < segments; ++j) {
        const float* seg = xc.data() + j * v;
        float s = 0.0f;
        for (std::size_t t = 0; t < m; ++t) {
          const float* centroid = books.centroid(t, q.planes[t](r, j));
          float dot = 0.0f;
          for (std::size_t k = 0; k < v; ++k) dot += centroid[k] * seg[k];
          s = t == 0 ? dot : s + dot;
        }
        macs += v;
        acc += s * scales(r, q.group_of_segment(j));
      }
      result.y(r, c) = acc;
    }
  }
  result.counters.mac_dense = macs;
  return result;
}

}  // namespace

void TileConfig::validate(const QuantConfig& cfg) const {
  if (width == 0 || width % cfg.v != 0) {
    throw ConfigError("tile width " + std::to_string(width) + " is not a positive multiple of v=" +
                      std::to_string(cfg.v));
  }
  if (height == 0) throw ConfigError("tile height must be >= 1");
  if (cfg.g != kRowWiseGroup) {
    const auto g = static_cast<std::size_t>(cfg.g);
    const bool inside_group = width <= g && g % width == 0;
    const bool whole_groups = width % g == 0;
    if (!inside_group && !whole_groups) {
      throw ConfigError("tile width " + std::to_string(width) + " straddles groups of size " + std::to_string(g));
    }
  }
}

PhaseSplit phase_split(const OpCounters& counters) {
  const std::uint64_t total = counters.mac_build + counters.mac_read_adds;
  if (total == 0) throw InvariantError("phase split needs non-zero build or read counters");
  const double build = static_cast<double>(counters.mac_build) / static_cast<double>(total);
  const double read = static_cast<double>(counters.mac_read_adds) / static_cast<double>(total);
  return {build, read};
}

template <class Acc>
Grid<Acc> dense_gemm(const Matrix& w, const Matrix& x, OpCounters* counters, int threads) {
  if (w.cols() != x.rows()) {
    throw ShapeError("dense_gemm: W is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     " but X has " + std::to_string(x.rows()) + " rows");
  }
  threads = resolve_threads(threads);
  const std::size_t k_dim = w.cols();
  const std::size_t n = x.cols();

  // X transposed so every dot product walks contiguous memory.
  std::vector<Acc> xt(n * k_dim);
  for (std::size_t k = 0; k < k_dim; ++k) {
    for (std::size_t c = 0; c < n; ++c) xt[c * k_dim + k] = static_cast<Acc>(f16_to_float(x(k, c)));
  }

  Grid<Acc> y(w.rows(), n);
  std::uint64_t macs = 0;
  const auto rows = static_cast<std::ptrdiff_t>(w.rows());
#pragma omp parallel num_threads(threads) reduction(+ : macs)
  {
    std::vector<Acc> wr(k_dim);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      auto row = w.row(r);
      for (std::size_t k = 0; k < k_dim; ++k) wr[k] = static_cast<Acc>(f16_to_float(row[k]));
      for (std::size_t c = 0; c < n; ++c) {
        const Acc* xc = xt.data() + c * k_dim;
        Acc acc = 0;
        for (std::size_t k = 0; k < k_dim; ++k) {
          acc += wr[k] * xc[k];
          ++macs;
        }
        y(r, c) = acc;
      }
    }
  }
  if (counters) counters->mac_dense += macs;
  return y;
}

template Grid<float> dense_gemm<float>(const Matrix&, const Matrix&, OpCounters*, int);
template Grid<double> dense_gemm<double>(const Matrix&, const Matrix&, OpCounters*, int);

GemmResult dequant_gemm(const QuantizedLayer& q, const Matrix& x, DequantOrder order, int threads) {
  check_input(q, x);
  threads = resolve_threads(threads);
  if (order == DequantOrder::mirrored) return mirrored_dequant(q, x, threads);

  GemmResult result{Grid<float>(1, 1), {}, 0, 0};
  const Matrix w_hat = reconstruct(q);
  result.y = dense_gemm<float>(w_hat, x, &result.counters, threads);
  return result;
}

GemmResult codegemm_gemm(const QuantizedLayer& q, const Matrix& x, const TileConfig& tiles, int threads) {
  check_input(q, x);
  tiles.validate(q.config);
  threads = resolve_threads(threads);

  const std::size_t v = q.config.v;
  const std::size_t m = q.config.m;
  const std::size_t segments = q.segments_per_row();
  const WideCodebooks books(q.books);
  const Grid<float> scales = to_float(q.scales);
  const std::vector<TileSpan> spans = k_tiles(q.cols, tiles.width);

  std::vector<const std::uint16_t*> planes(m);
  for (std::size_t t = 0; t < m; ++t) planes[t] = q.planes[t].data().data();

  // Scale column of every segment, shared by all rows.
  std::vector<std::size_t> segment_group(segments);
  for (std::size_t j = 0; j < segments; ++j) segment_group[j] = q.group_of_segment(j);

  GemmResult result{Grid<float>(q.rows, x.cols()), {}, 0, 0};
  const auto tile_count = static_cast<std::ptrdiff_t>(spans.size());
  const std::size_t row_blocks = (q.rows + tiles.height - 1) / tiles.height;

  for (std::size_t c = 0; c < x.cols(); ++c) {
    const std::vector<float> xc = input_column(x, c);

    // Build phase: one Psumbook per K-tile of this column.
    std::vector<Psumbook> tables(spans.size(), Psumbook(0, 0, 0));
    std::uint64_t build_macs = 0;
#pragma omp parallel for num_threads(threads) schedule(static) reduction(+ : build_macs)
    for (std::ptrdiff_t ti = 0; ti < tile_count; ++ti) {
      const TileSpan span = spans[static_cast<std::size_t>(ti)];
      OpCounters local;
      tables[static_cast<std::size_t>(ti)] =
          build_psumbook(std::span<const float>(xc).subspan(span.begin, span.width), books, local);
      build_macs += local.mac_build;
    }
    result.counters.mac_build += build_macs;
    result.psumbooks_built += tables.size();
    if (c == 0) result.psumbook_entries = tables.front().size();

    // Read phase: row blocks are independent; each output has one writer.
    std::uint64_t fetches = 0;
    const auto blocks = static_cast<std::ptrdiff_t>(row_blocks);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1) reduction(+ : fetches)
    for (std::ptrdiff_t bi = 0; bi < blocks; ++bi) {
      const std::size_t r0 = static_cast<std::size_t>(bi) * tiles.height;
      const std::size_t r1 = std::min(q.rows, r0 + tiles.height);
      std::vector<float> acc(r1 - r0, 0.0f);
      for (std::size_t ti = 0; ti < spans.size(); ++ti) {
        const Psumbook& table = tables[ti];
        const std::size_t seg0 = spans[ti].begin / v;
        const std::size_t seg_count = spans[ti].width / v;
        for (std::size_t r = r0; r < r1; ++r) {
          const std::size_t code_base = r * segments + seg0;
          const float* row_scales = scales.row(r).data();
          float a = acc[r - r0];
          for (std::size_t j = 0; j < seg_count; ++j) {
            float s = table.slice(0, j)[planes[0][code_base + j]];
            ++fetches;
            for (std::size_t t = 1; t < m; ++t) {
              s += table.slice(t, j)[planes[t][code_base + j]];
              ++fetches;
            }
            a += s * row_scales[segment_group[seg0 + j]];
          }
          acc[r - r0] = a;
        }
      }
      for (std::size_t r = r0; r < r1; ++r) result.y(r, c) = acc[r - r0];
    }
    result.counters.lookups += fetches;
    result.counters.mac_read_adds += fetches;
  }
  return result;
}

}  // namespace codegemm
