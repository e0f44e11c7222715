#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "codegemm/grid.hpp"

namespace codegemm {

// CGT1 tensor container:
//   "CGT1" | u32 version = 1 | u32 rank = 2 | u64 rows | u64 cols | rows*cols binary16
// All integers and payload elements little-endian, payload row-major.
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 4 + 4 + 4 + 8 + 8;

std::vector<std::uint8_t> encode_tensor(const Matrix& m);
Matrix decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const Matrix& m, const std::filesystem::path& path);
Matrix load_tensor(const std::filesystem::path& path);

}  // namespace codegemm
