#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "cxlsim/sim/error.hpp"

namespace cxlsim {

// Dense device index in a topology graph (0..num_nodes-1).
struct NodeId {
  std::uint32_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}
  constexpr auto operator<=>(const NodeId&) const = default;
};

// 12-bit edge port identifier used by port-based routing.
struct PortId {
  static constexpr std::uint32_t kMax = 4095;

  std::uint16_t value = 0;

  constexpr PortId() = default;
  explicit PortId(std::uint32_t v) : value(static_cast<std::uint16_t>(v)) {
    if (v > kMax) {
      throw ConfigError("port id " + std::to_string(v) +
                        " exceeds the 12-bit port space");
    }
  }
  constexpr auto operator<=>(const PortId&) const = default;
};

inline std::string to_string(NodeId n) { return "node " + std::to_string(n.value); }
inline std::string to_string(PortId p) { return "port " + std::to_string(p.value); }

}  // namespace cxlsim

template <>
struct std::hash<cxlsim::NodeId> {
  std::size_t operator()(cxlsim::NodeId n) const noexcept { return n.value; }
};

template <>
struct std::hash<cxlsim::PortId> {
  std::size_t operator()(cxlsim::PortId p) const noexcept { return p.value; }
};
