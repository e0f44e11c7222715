#pragma once

#include <cstdint>

namespace codegemm {

// Exact event tallies. One increment per multiply-accumulate or table fetch.
struct OpCounters {
  std::uint64_t mac_build = 0;      // Psumbook construction MACs
  std::uint64_t mac_read_adds = 0;  // additions of fetched partial sums
  std::uint64_t lookups = 0;        // Psumbook fetches
  std::uint64_t mac_dense = 0;      // weight-by-input MACs of dense/dequant paths

  // mac_build / (mac_build + mac_read_adds); 0 when both are zero.
  double phase_build_fraction() const noexcept {
    const std::uint64_t total = mac_build + mac_read_adds;
    return total == 0 ? 0.0 : static_cast<double>(mac_build) / static_cast<double>(total);
  }

  OpCounters& operator+=(const OpCounters& o) noexcept {
    mac_build += o.mac_build;
    mac_read_adds += o.mac_read_adds;
    lookups += o.lookups;
    mac_dense += o.mac_dense;
    return *this;
  }

  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

struct PhaseSplit {
  double build_fraction = 0.0;
  double read_fraction = 0.0;
};

// Build/read share of the Psumbook MACs. Throws InvariantError when both
// counters are zero.
PhaseSplit phase_split(const OpCounters& counters);

}  // namespace codegemm
