#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>

#include "cxlsim/fabric/graph.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

struct Transmission {
  SimTime start = 0;       // serialization begins
  SimTime serialized = 0;  // last byte leaves the sender
  SimTime propagated = 0;  // last byte reaches the far port
  SimTime delivered = 0;   // packet handed to the far device
};

// Timing model for one link. Direction 0 is a->b of the LinkSpec.
//
// Busy and payload time are accumulated only inside the measurement window;
// transfers straddling a window edge contribute only the overlapping part.
class Bus {
 public:
  Bus(const LinkSpec& link, SimTime port_delay) : link_(link), port_delay_(port_delay) {}

  const LinkSpec& link() const noexcept { return link_; }
  bool full_duplex() const noexcept { return link_.duplex == Duplex::full; }

  Transmission transmit(int dir, SimTime now, std::uint32_t wire_bytes, std::uint32_t payload_bytes) {
    const SimTime ser = transfer_ticks(wire_bytes, link_.bandwidth);
    const SimTime payload = std::min(ser, transfer_ticks(payload_bytes, link_.bandwidth));
    SimTime start;
    if (full_duplex()) {
      start = std::max(now, busy_until_[dir]);
    } else {
      start = std::max({now, busy_until_[0], busy_until_[1]});
      if (last_dir_ >= 0 && last_dir_ != dir) start += link_.turnaround;
      last_dir_ = dir;
    }
    Transmission t;
    t.start = start;
    t.serialized = start + ser;
    t.propagated = t.serialized + link_.propagation;
    t.delivered = t.propagated + 2 * port_delay_;
    busy_until_[dir] = t.serialized;

    prune(dir, now);
    if (ser > 0) backlog_[dir].push_back({start, t.serialized, wire_bytes, payload});
    if (window_open_) {
      busy_[dir] += static_cast<double>(ser);
      payload_[dir] += static_cast<double>(payload);
    }
    ++packets_[dir];
    bytes_[dir] += wire_bytes;
    return t;
  }

  // Bytes accepted in `dir` but not yet fully serialized at `now`.
  std::uint64_t backlog_bytes(int dir, SimTime now) {
    prune(dir, now);
    std::uint64_t total = 0;
    for (const auto& e : backlog_[dir]) total += e.bytes;
    return total;
  }

  SimTime busy_until(int dir) const noexcept { return busy_until_[dir]; }

  void open_window(SimTime t) {
    window_open_ = true;
    for (int d = 0; d < 2; ++d) {
      busy_[d] = payload_[d] = 0.0;
      prune(d, t);
      for (const auto& e : backlog_[d]) add_tail(d, e, t, +1.0);
    }
  }

  void close_window(SimTime t) {
    if (!window_open_) return;
    window_open_ = false;
    for (int d = 0; d < 2; ++d) {
      prune(d, t);
      for (const auto& e : backlog_[d]) add_tail(d, e, t, -1.0);
    }
  }

  double busy_time(int dir) const noexcept { return busy_[dir]; }
  double payload_time(int dir) const noexcept { return payload_[dir]; }
  std::uint64_t packets(int dir) const noexcept { return packets_[dir]; }
  std::uint64_t bytes(int dir) const noexcept { return bytes_[dir]; }

  // Fraction of the window the bus was busy: per-direction busy time over
  // the channel time available (two channels when full duplex, one shared
  // channel when half duplex).
  double utility(SimTime window) const {
    if (window == 0) return 0.0;
    const double channels = full_duplex() ? 2.0 : 1.0;
    return (busy_[0] + busy_[1]) / (static_cast<double>(window) * channels);
  }

  double direction_utility(int dir, SimTime window) const {
    return window == 0 ? 0.0 : busy_[dir] / static_cast<double>(window);
  }

  // Payload share of busy time, both directions pooled; negative when idle.
  double efficiency() const {
    const double busy = busy_[0] + busy_[1];
    return busy > 0.0 ? (payload_[0] + payload_[1]) / busy : -1.0;
  }

  double direction_efficiency(int dir) const {
    return busy_[dir] > 0.0 ? payload_[dir] / busy_[dir] : -1.0;
  }

 private:
  struct InFlight {
    SimTime start;
    SimTime finish;
    std::uint32_t bytes;
    SimTime payload;
  };

  void prune(int dir, SimTime now) {
    auto& q = backlog_[dir];
    while (!q.empty() && q.front().finish <= now) q.pop_front();
  }

  // Adds (sign=+1) or removes (sign=-1) the part of `e` after time t.
  void add_tail(int dir, const InFlight& e, SimTime t, double sign) {
    const SimTime from = std::max(e.start, t);
    if (e.finish <= from) return;
    const double part = static_cast<double>(e.finish - from);
    const double whole = static_cast<double>(e.finish - e.start);
    busy_[dir] += sign * part;
    payload_[dir] += sign * static_cast<double>(e.payload) * part / whole;
  }

  LinkSpec link_;
  SimTime port_delay_;
  std::array<SimTime, 2> busy_until_{0, 0};
  int last_dir_ = -1;
  std::array<std::deque<InFlight>, 2> backlog_;
  bool window_open_ = false;
  std::array<double, 2> busy_{0.0, 0.0};
  std::array<double, 2> payload_{0.0, 0.0};
  std::array<std::uint64_t, 2> packets_{0, 0};
  std::array<std::uint64_t, 2> bytes_{0, 0};
};

}  // namespace cxlsim
