#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cxlsim/fabric/ids.hpp"
#include "cxlsim/sim/error.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

inline constexpr std::uint32_t kLineBytes = 64;

inline std::uint64_t line_of(std::uint64_t address) { return address & ~std::uint64_t{kLineBytes - 1}; }

enum class PacketKind : std::uint8_t { MemRd, MemWr, RdResp, WrResp, BISnp, BIRsp };

inline const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::MemRd: return "MemRd";
    case PacketKind::MemWr: return "MemWr";
    case PacketKind::RdResp: return "RdResp";
    case PacketKind::WrResp: return "WrResp";
    case PacketKind::BISnp: return "BISnp";
    case PacketKind::BIRsp: return "BIRsp";
  }
  return "?";
}

// Where a transaction spent its time. Every nanosecond between issue and
// completion lands in exactly one stage.
enum class Stage : std::uint8_t { requester, cache, queuing, switching, bus, port, endpoint, snoop };

inline constexpr std::size_t kNumStages = 8;

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::requester: return "requester";
    case Stage::cache: return "cache";
    case Stage::queuing: return "queuing";
    case Stage::switching: return "switching";
    case Stage::bus: return "bus";
    case Stage::port: return "port";
    case Stage::endpoint: return "endpoint";
    case Stage::snoop: return "snoop";
  }
  return "?";
}

// Running latency ledger. stamp(s, t) charges [last, t) to stage s, so the
// stage durations always sum to last - start.
class Ledger {
 public:
  void start(SimTime t) {
    start_ = last_ = t;
    stages_.fill(0);
  }

  void stamp(Stage s, SimTime t) {
    if (t < last_) {
      throw SimulationError(std::string("ledger stamp for stage ") + to_string(s) + " goes back from " +
                                std::to_string(last_) + " to " + std::to_string(t),
                            t);
    }
    stages_[static_cast<std::size_t>(s)] += t - last_;
    last_ = t;
  }

  SimTime start_time() const noexcept { return start_; }
  SimTime last() const noexcept { return last_; }
  SimTime total() const noexcept { return last_ - start_; }
  SimTime operator[](Stage s) const noexcept { return stages_[static_cast<std::size_t>(s)]; }
  const std::array<SimTime, kNumStages>& stages() const noexcept { return stages_; }

  SimTime sum() const noexcept { return std::accumulate(stages_.begin(), stages_.end(), SimTime{0}); }

 private:
  SimTime start_ = 0;
  SimTime last_ = 0;
  std::array<SimTime, kNumStages> stages_{};
};

inline constexpr std::uint32_t kNoTxn = ~std::uint32_t{0};

struct Packet {
  PacketKind kind = PacketKind::MemRd;
  std::uint64_t address = 0;
  std::uint32_t payload_bytes = 0;
  std::uint32_t header_bytes = 0;
  PortId src;
  PortId dst;
  std::uint16_t hop_count = 0;
  std::uint16_t request_hops = 0;  // responses: hop count of the request leg
  std::uint8_t block_len = 1;
  bool dirty = false;       // BIRsp carrying data, or a writeback MemWr
  bool cacheable = false;   // request from a requester with a local cache
  bool writeback = false;   // MemWr caused by a dirty local eviction; no response
  bool error = false;       // response to a request the endpoint could not serve
  std::uint32_t txn = kNoTxn;
  Ledger ledger;

  // Transit state while inside the fabric.
  NodeId at;
  std::size_t egress = 0;

  std::uint32_t wire_bytes() const noexcept { return header_bytes + payload_bytes; }
};

// Packet storage with index handles; events carry the index.
class PacketPool {
 public:
  std::uint32_t acquire() {
    std::uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      packets_[id] = Packet{};
    } else {
      id = static_cast<std::uint32_t>(packets_.size());
      packets_.emplace_back();
    }
    ++live_;
    return id;
  }

  void release(std::uint32_t id) {
    free_.push_back(id);
    --live_;
  }

  Packet& operator[](std::uint32_t id) { return packets_[id]; }
  const Packet& operator[](std::uint32_t id) const { return packets_[id]; }
  std::size_t live() const noexcept { return live_; }

 private:
  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_;
  std::size_t live_ = 0;
};

// Header sizing: every packet carries `header_bytes`; when `header_on_data`
// is false the header rides only on packets without payload, so that with a
// header equal to one payload both bus directions carry one line-sized
// transfer per request regardless of the read/write mix.
struct HeaderModel {
  double overhead = 0.0;   // header length as a fraction of the 64 B payload
  bool header_on_data = false;

  bool operator==(const HeaderModel&) const = default;

  std::uint32_t header_bytes() const noexcept {
    return static_cast<std::uint32_t>(overhead * kLineBytes + 0.5);
  }
  std::uint32_t for_packet(std::uint32_t payload) const noexcept {
    return (payload == 0 || header_on_data) ? header_bytes() : 0;
  }
};

}  // namespace cxlsim
