#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "codegemm/error.hpp"
#include "codegemm/half.hpp"

namespace codegemm {

// Dense row-major rows x cols array. Both dimensions are at least one.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid(std::size_t rows, std::size_t cols) : Grid(rows, cols, std::vector<T>(checked_size(rows, cols))) {}

  Grid(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw ShapeError("grid data length does not equal rows*cols");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
      throw ShapeError("grid dimensions must be at least 1");
    }
    return rows * cols;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> data_;
};

// Weights, inputs and reconstructions at rest.
using Matrix = Grid<Half>;

Matrix to_half(const Grid<float>& m);
Matrix to_half(const Grid<double>& m);
Grid<float> to_float(const Matrix& m);

}  // namespace codegemm
