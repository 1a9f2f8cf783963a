#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxlsim/fabric/ids.hpp"
#include "cxlsim/sim/error.hpp"

namespace cxlsim {

// Address-to-endpoint mapping: consecutive `granularity`-byte chunks are
// spread round-robin over `endpoints`.
struct InterleavePolicy {
  std::uint64_t granularity = 64;
  std::vector<PortId> endpoints;

  void validate() const {
    if (granularity == 0 || (granularity & (granularity - 1)) != 0) {
      throw ConfigError("interleave granularity must be a power of two, got " + std::to_string(granularity));
    }
    if (endpoints.empty()) throw ConfigError("interleave needs at least one endpoint");
  }

  std::size_t index(std::uint64_t address) const {
    return static_cast<std::size_t>((address / granularity) % endpoints.size());
  }

  PortId endpoint(std::uint64_t address) const { return endpoints[index(address)]; }

  // Offset of `address` inside the endpoint that owns it.
  std::uint64_t local_address(std::uint64_t address) const {
    const auto stripe = granularity * endpoints.size();
    return (address / stripe) * granularity + address % granularity;
  }
};

}  // namespace cxlsim
