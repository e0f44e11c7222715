#include "codegemm/layer_file.hpp"

#include <string>

#include "codegemm/code_pack.hpp"
#include "codegemm/detail/bytes.hpp"

namespace codegemm {

PayloadBits payload_bits(const QuantizedLayer& q) {
  const std::uint64_t codes_per_plane = std::uint64_t{q.rows} * q.segments_per_row();
  PayloadBits bits;
  bits.scale_bits = 16 * std::uint64_t{q.scales.size()};
  bits.codebook_bits = 16 * q.config.m * q.config.codebook_entries() * q.config.v;
  bits.code_bits = q.config.m * codes_per_plane * q.config.b;
  bits.padding_bits = q.config.m * (8 * packed_size(codes_per_plane, q.config.b) - codes_per_plane * q.config.b);
  return bits;
}

std::vector<std::uint8_t> encode_layer(const QuantizedLayer& q) {
  q.validate();
  detail::ByteWriter w;
  w.put_magic("CGMM");
  w.put<std::uint32_t>(kLayerVersion);
  w.put<std::uint64_t>(q.rows);
  w.put<std::uint64_t>(q.cols);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(q.config.v));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(q.config.m));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(q.config.b));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(q.config.g));
  w.put<std::uint64_t>(q.config.seed);
  for (Half h : q.scales.data()) w.put<std::uint16_t>(h.bits);
  for (const auto& book : q.books) {
    for (Half h : book.entries) w.put<std::uint16_t>(h.bits);
  }
  for (const auto& plane : q.planes) w.put_bytes(pack_codes(plane, q.config.b));
  return std::move(w.bytes());
}

QuantizedLayer decode_layer(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic_matches("CGMM")) throw FormatError(FormatErrc::bad_magic, "not a CGMM layer file");
  if (auto version = r.get<std::uint32_t>("version"); version != kLayerVersion) {
    throw FormatError(FormatErrc::version_mismatch, "layer version " + std::to_string(version));
  }
  QuantizedLayer q;
  const auto rows = r.get<std::uint64_t>("M");
  const auto cols = r.get<std::uint64_t>("K");
  q.config.v = r.get<std::uint16_t>("v");
  q.config.m = r.get<std::uint16_t>("m");
  q.config.b = r.get<std::uint8_t>("b");
  q.config.g = static_cast<std::int64_t>(r.get<std::uint64_t>("g"));
  q.config.seed = r.get<std::uint64_t>("seed");

  // 2^32 elements per dimension keeps every derived byte count in range.
  constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;
  constexpr std::uint64_t kMaxWeights = std::uint64_t{1} << 48;
  if (rows > kMaxDim || cols > kMaxDim || (cols != 0 && rows > kMaxWeights / cols)) {
    throw FormatError(FormatErrc::dim_overflow, "layer dimensions too large");
  }
  q.rows = static_cast<std::size_t>(rows);
  q.cols = static_cast<std::size_t>(cols);
  try {
    q.config.validate_for(q.rows, q.cols);
  } catch (const ConfigError& e) {
    throw FormatError(FormatErrc::invariant_violation, e.what());
  }

  const std::size_t groups = q.groups_per_row();
  const std::size_t segments = q.segments_per_row();
  const std::size_t entries = q.config.codebook_entries();

  auto read_halves = [&r](std::size_t count, const char* what) {
    auto raw = r.take(count * 2, what);
    std::vector<Half> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      out[i].bits = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
    }
    return out;
  };

  q.scales = ScalePlane(q.rows, groups, read_halves(q.rows * groups, "scales"));
  for (std::size_t t = 0; t < q.config.m; ++t) {
    q.books.push_back(Codebook{q.config.v, read_halves(entries * q.config.v, "codebook")});
  }
  const std::size_t plane_bytes = packed_size(q.rows * segments, q.config.b);
  for (std::size_t t = 0; t < q.config.m; ++t) {
    q.planes.push_back(unpack_codes(r.take(plane_bytes, "code plane"), q.rows, segments, q.config.b));
  }
  if (r.remaining() != 0) throw FormatError(FormatErrc::trailing_bytes, "data after the last code plane");

  try {
    q.validate();
  } catch (const Error& e) {
    throw FormatError(FormatErrc::invariant_violation, e.what());
  }
  return q;
}

void serialize(const QuantizedLayer& q, const std::filesystem::path& path) {
  detail::write_file(path, encode_layer(q));
}

QuantizedLayer deserialize(const std::filesystem::path& path) { return decode_layer(detail::read_file(path)); }

}  // namespace codegemm
