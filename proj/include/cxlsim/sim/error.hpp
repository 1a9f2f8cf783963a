#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cxlsim {

// Invalid user input: topology, config file, trace file, preset parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken simulator invariant (protocol violation, scheduling in the past).
class SimulationError : public std::logic_error {
 public:
  SimulationError(const std::string& what, std::uint64_t at_ns)
      : std::logic_error(what + " (at t=" + std::to_string(at_ns) + " ns)"),
        at_ns_(at_ns) {}

  std::uint64_t at_ns() const noexcept { return at_ns_; }

 private:
  std::uint64_t at_ns_;
};

}  // namespace cxlsim
