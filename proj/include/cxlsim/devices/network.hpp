#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "cxlsim/devices/bus.hpp"
#include "cxlsim/devices/packet.hpp"
#include "cxlsim/fabric/graph.hpp"
#include "cxlsim/fabric/routing.hpp"
#include "cxlsim/sim/engine.hpp"

namespace cxlsim {

enum class RoutingMode : std::uint8_t { oblivious, adaptive };

inline const char* to_string(RoutingMode m) { return m == RoutingMode::oblivious ? "oblivious" : "adaptive"; }

inline RoutingMode parse_routing_mode(const std::string& s) {
  if (s == "oblivious") return RoutingMode::oblivious;
  if (s == "adaptive") return RoutingMode::adaptive;
  throw ConfigError("unknown routing strategy '" + s + "' (expected oblivious or adaptive)");
}

// A requester or endpoint: receives packets delivered by the fabric.
class Device {
 public:
  virtual ~Device() = default;
  virtual void receive(std::uint32_t packet) = 0;
};

struct SwitchStats {
  std::uint64_t forwarded = 0;
};

// The interconnect: one Bus per link plus the forwarding logic of every
// switch. A packet moves ARRIVE -> (switch: choose egress, wait switching
// time) -> HANDOFF -> bus -> ARRIVE at the far end, until it reaches the
// destination terminal's Device.
class Network final : public EventHandler {
 public:
  struct Timing {
    SimTime switching = 20;
    SimTime port_delay = 25;
  };

  Network(Engine& engine, const TopologyGraph& graph, const RoutingTable& table, PacketPool& pool, Timing timing,
          RoutingMode mode)
      : engine_(engine), graph_(graph), table_(table), pool_(pool), timing_(timing), mode_(mode),
        devices_(graph.num_nodes(), nullptr), pending_(graph.num_links() * 2, 0),
        rr_(graph.num_nodes()), switch_stats_(graph.num_nodes()) {
    buses_.reserve(graph.num_links());
    for (const auto& l : graph.links()) buses_.emplace_back(l, timing.port_delay);
  }

  void attach(NodeId node, Device* d) { devices_.at(node.value) = d; }

  const TopologyGraph& graph() const noexcept { return graph_; }
  RoutingMode mode() const noexcept { return mode_; }
  Bus& bus(std::size_t link) { return buses_.at(link); }
  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const SwitchStats& switch_stats(NodeId n) const { return switch_stats_.at(n.value); }
  std::uint64_t delivered() const noexcept { return delivered_; }

  // Injects a packet from terminal `from` at the current time.
  void send(NodeId from, std::uint32_t id) {
    auto& p = pool_[id];
    p.at = from;
    p.egress = graph_.attachment_link(from);
    handoff(id);
  }

  void open_window(SimTime t) {
    for (auto& b : buses_) b.open_window(t);
  }
  void close_window(SimTime t) {
    for (auto& b : buses_) b.close_window(t);
  }

  // Bytes waiting for, or being serialized onto, `link` in the direction
  // leaving `from`: packets inside the switch pipeline plus the bus backlog.
  std::uint64_t occupancy(std::size_t link, NodeId from) {
    const int dir = graph_.direction(link, from);
    return pending_[link * 2 + dir] + buses_[link].backlog_bytes(dir, engine_.now());
  }

  // Egress decision for a packet at switch `at`.
  NextHop choose(NodeId at, const Packet& p) {
    const auto& c = table_.candidates(at, p.dst);
    if (c.empty()) {
      throw SimulationError("no route from " + to_string(at) + " to " + to_string(p.dst), engine_.now());
    }
    if (mode_ == RoutingMode::oblivious || c.size() == 1) return c.front();
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    tied_.clear();
    for (const auto& h : c) {
      const auto occ = occupancy(h.link, at);
      if (occ < best) {
        best = occ;
        tied_.clear();
      }
      if (occ == best) tied_.push_back(h);
    }
    if (tied_.size() == 1) return tied_.front();
    auto& counter = rr_[at.value][(std::uint32_t{p.src.value} << 16) | p.dst.value];
    return tied_[counter++ % tied_.size()];
  }

  void on_event(std::uint32_t kind, std::uint64_t arg) override {
    const auto id = static_cast<std::uint32_t>(arg);
    if (kind == kArrive) {
      arrive(id);
    } else {
      auto& p = pool_[id];
      pending_[p.egress * 2 + graph_.direction(p.egress, p.at)] -= p.wire_bytes();
      handoff(id);
    }
  }

 private:
  static constexpr std::uint32_t kArrive = 0;
  static constexpr std::uint32_t kHandoff = 1;

  void handoff(std::uint32_t id) {
    auto& p = pool_[id];
    const int dir = graph_.direction(p.egress, p.at);
    const auto tx = buses_[p.egress].transmit(dir, engine_.now(), p.wire_bytes(), p.payload_bytes);
    p.ledger.stamp(Stage::queuing, tx.start);
    p.ledger.stamp(Stage::bus, tx.propagated);
    p.ledger.stamp(Stage::port, tx.delivered);
    p.at = graph_.other_end(p.egress, p.at);
    engine_.schedule(tx.delivered, *this, kArrive, id);
  }

  void arrive(std::uint32_t id) {
    auto& p = pool_[id];
    ++p.hop_count;
    if (!graph_.is_switch(p.at)) {
      if (graph_.port_of(p.at) != p.dst) {
        throw SimulationError(std::string(to_string(p.kind)) + " for " + to_string(p.dst) + " delivered to " +
                                  to_string(p.at),
                              engine_.now());
      }
      ++delivered_;
      devices_.at(p.at.value)->receive(id);
      return;
    }
    const auto hop = choose(p.at, p);
    p.egress = hop.link;
    pending_[hop.link * 2 + graph_.direction(hop.link, p.at)] += p.wire_bytes();
    ++switch_stats_[p.at.value].forwarded;
    const SimTime ready = engine_.now() + timing_.switching;
    p.ledger.stamp(Stage::switching, ready);
    engine_.schedule(ready, *this, kHandoff, id);
  }

  Engine& engine_;
  const TopologyGraph& graph_;
  const RoutingTable& table_;
  PacketPool& pool_;
  Timing timing_;
  RoutingMode mode_;
  std::vector<Bus> buses_;
  std::vector<Device*> devices_;
  std::vector<std::uint64_t> pending_;
  std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> rr_;
  std::vector<SwitchStats> switch_stats_;
  std::vector<NextHop> tied_;
  std::uint64_t delivered_ = 0;
};

}  // namespace cxlsim
