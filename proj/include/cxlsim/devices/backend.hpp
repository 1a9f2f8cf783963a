#pragma once

#include <cstdint>

#include "cxlsim/sim/time.hpp"

namespace cxlsim {

// Media model behind a memory endpoint's controller. access() is called when
// the controller hands a request over and returns when the data is ready.
class MemoryBackend {
 public:
  virtual ~MemoryBackend() = default;
  virtual SimTime access(std::uint64_t local_address, bool is_write, SimTime now) = 0;
};

// Pipelined media with a constant access latency.
class FixedLatencyBackend final : public MemoryBackend {
 public:
  explicit FixedLatencyBackend(SimTime latency) : latency_(latency) {}
  SimTime access(std::uint64_t, bool, SimTime now) override { return now + latency_; }
  SimTime latency() const noexcept { return latency_; }

 private:
  SimTime latency_;
};

}  // namespace cxlsim
