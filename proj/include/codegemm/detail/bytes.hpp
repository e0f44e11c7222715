#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "codegemm/error.hpp"

namespace codegemm::detail {

// Little-endian append-only buffer.
class ByteWriter {
 public:
  void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  template <class UInt>
  void put(UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
    }
  }

  void put_magic(const char (&magic)[5]) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(magic[i]));
  }

  std::vector<std::uint8_t>& bytes() noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Little-endian cursor; running off the end is a truncation error.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (n > remaining()) {
      throw FormatError(FormatErrc::truncated, std::string("unexpected end of data reading ") + what);
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <class UInt>
  UInt get(const char* what) {
    auto raw = take(sizeof(UInt), what);
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= std::uint64_t{raw[i]} << (8 * i);
    return static_cast<UInt>(value);
  }

  bool magic_matches(const char (&magic)[5]) {
    auto raw = take(4, "magic");
    for (int i = 0; i < 4; ++i) {
      if (raw[i] != static_cast<std::uint8_t>(magic[i])) return false;
    }
    return true;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace codegemm::detail
