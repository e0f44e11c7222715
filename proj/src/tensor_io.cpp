#include "codegemm/tensor_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "codegemm/detail/bytes.hpp"

namespace codegemm {

std::string_view to_string(FormatErrc code) noexcept {
  switch (code) {
    case FormatErrc::io: return "io";
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::version_mismatch: return "version mismatch";
    case FormatErrc::bad_rank: return "bad rank";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::trailing_bytes: return "trailing bytes";
    case FormatErrc::dim_overflow: return "dimension overflow";
    case FormatErrc::invariant_violation: return "invariant violation";
  }
  return "unknown";
}

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrc::io, "write failed for " + path.string());
}

}  // namespace detail

std::vector<std::uint8_t> encode_tensor(const Matrix& m) {
  detail::ByteWriter w;
  w.put_magic("CGT1");
  w.put<std::uint32_t>(kTensorVersion);
  w.put<std::uint32_t>(2);
  w.put<std::uint64_t>(m.rows());
  w.put<std::uint64_t>(m.cols());
  w.bytes().reserve(kTensorHeaderBytes + 2 * m.size());
  for (Half h : m.data()) w.put<std::uint16_t>(h.bits);
  return std::move(w.bytes());
}

Matrix decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic_matches("CGT1")) throw FormatError(FormatErrc::bad_magic, "not a CGT1 tensor");
  if (auto version = r.get<std::uint32_t>("version"); version != kTensorVersion) {
    throw FormatError(FormatErrc::version_mismatch, "tensor version " + std::to_string(version));
  }
  if (auto rank = r.get<std::uint32_t>("rank"); rank != 2) {
    throw FormatError(FormatErrc::bad_rank, "tensor rank " + std::to_string(rank));
  }
  const auto rows = r.get<std::uint64_t>("rows");
  const auto cols = r.get<std::uint64_t>("cols");
  if (rows == 0 || cols == 0) {
    throw FormatError(FormatErrc::invariant_violation, "zero tensor dimension");
  }
  constexpr std::uint64_t kMaxElements = std::numeric_limits<std::size_t>::max() / 2;
  if (rows > kMaxElements / cols) {
    throw FormatError(FormatErrc::dim_overflow, "rows*cols overflows");
  }
  const std::uint64_t count = rows * cols;
  auto payload = r.take(static_cast<std::size_t>(count * 2), "payload");
  if (r.remaining() != 0) throw FormatError(FormatErrc::trailing_bytes, "data after tensor payload");

  std::vector<Half> data(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].bits = static_cast<std::uint16_t>(payload[2 * i] | (payload[2 * i + 1] << 8));
  }
  return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

void save_tensor(const Matrix& m, const std::filesystem::path& path) { detail::write_file(path, encode_tensor(m)); }

Matrix load_tensor(const std::filesystem::path& path) { return decode_tensor(detail::read_file(path)); }

}  // namespace codegemm
