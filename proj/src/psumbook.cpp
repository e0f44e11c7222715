#include "codegemm/psumbook.hpp"

namespace codegemm {

WideCodebooks::WideCodebooks(std::span<const Codebook> books)
    : count(books.size()),
      entries(books.empty() ? 0 : books.front().size()),
      v(books.empty() ? 0 : books.front().v) {
  values.reserve(count * entries * v);
  for (const auto& book : books) {
    if (book.v != v || book.size() != entries) throw ShapeError("codebooks differ in shape");
    for (Half h : book.entries) values.push_back(f16_to_float(h));
  }
}

Psumbook build_psumbook(std::span<const float> x_tile, const WideCodebooks& books, OpCounters& counters) {
  const std::size_t v = books.v;
  if (v == 0 || x_tile.size() % v != 0) throw ShapeError("tile width is not a multiple of v");
  const std::size_t segments = x_tile.size() / v;
  Psumbook book(books.count, segments, books.entries);
  std::uint64_t macs = 0;
  for (std::size_t t = 0; t < books.count; ++t) {
    for (std::size_t j = 0; j < segments; ++j) {
      const float* x = x_tile.data() + j * v;
      float* out = book.slice(t, j);
      for (std::size_t i = 0; i < books.entries; ++i) {
        const float* c = books.centroid(t, i);
        float p = 0.0f;
        for (std::size_t k = 0; k < v; ++k) {
          p += c[k] * x[k];
          ++macs;
        }
        out[i] = p;
      }
    }
  }
  counters.mac_build += macs;
  return book;
}

Psumbook build_psumbook(std::span<const float> x_tile, std::span<const Codebook> books, OpCounters& counters) {
  return build_psumbook(x_tile, WideCodebooks(books), counters);
}

}  // namespace codegemm
