#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "cxlsim/coherence/snoop_filter.hpp"
#include "cxlsim/devices/backend.hpp"
#include "cxlsim/devices/interleave.hpp"
#include "cxlsim/devices/network.hpp"
#include "cxlsim/devices/packet.hpp"
#include "cxlsim/sim/engine.hpp"

namespace cxlsim {

struct EndpointParams {
  SimTime controller_time = 40;
  std::uint64_t capacity_bytes = 0;  // 0: unbounded
  InterleavePolicy interleave;       // maps fabric addresses to local offsets
  HeaderModel header;
};

struct EndpointCounters {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t faults = 0;
  std::uint64_t snoop_waits = 0;
  std::uint64_t snoop_wait_ns = 0;
  std::uint64_t flush_writes = 0;
};

// Memory device. With a snoop filter it is an HDM-DB (device-coherent)
// endpoint: cacheable requests consult the filter and wait for any BISnp
// round trips it starts; without one it is HDM-H and serves requests
// directly.
class Endpoint final : public EventHandler, public Device {
 public:
  Endpoint(NodeId node, PortId port, Engine& engine, Network& net, PacketPool& pool, EndpointParams params,
           std::unique_ptr<MemoryBackend> backend, std::optional<SnoopFilter::Options> sf)
      : node_(node), port_(port), engine_(engine), net_(net), pool_(pool), p_(std::move(params)),
        backend_(std::move(backend)) {
    if (sf) sf_.emplace(*sf);
  }

  NodeId node() const noexcept { return node_; }
  PortId port() const noexcept { return port_; }
  const EndpointCounters& counters() const noexcept { return c_; }
  const std::optional<SnoopFilter>& snoop_filter() const noexcept { return sf_; }
  std::optional<SnoopFilter>& snoop_filter() noexcept { return sf_; }

  void receive(std::uint32_t id) override {
    auto& p = pool_[id];
    switch (p.kind) {
      case PacketKind::MemRd:
      case PacketKind::MemWr:
        if (p.writeback) {
          ++c_.writebacks;
          backend_->access(p_.interleave.local_address(p.address), true, engine_.now() + p_.controller_time);
          pool_.release(id);
          return;
        }
        if (sf_ && p.cacheable) {
          if (sf_->request(p.address, p.src, p.kind == PacketKind::MemWr, id)) {
            serve(id);
          }
          drain_filter();
        } else {
          serve(id);
        }
        return;
      case PacketKind::BIRsp: {
        if (!sf_) throw SimulationError("BIRsp at an endpoint without a snoop filter", engine_.now());
        const auto line = p.address;
        const auto from = p.src;
        const bool dirty = p.dirty;
        pool_.release(id);
        try {
          sf_->on_birsp(line, from, dirty);
        } catch (const std::logic_error& e) {
          throw SimulationError(e.what(), engine_.now());
        }
        drain_filter();
        return;
      }
      default:
        throw SimulationError(std::string("endpoint received ") + to_string(p.kind), engine_.now());
    }
  }

  void on_event(std::uint32_t kind, std::uint64_t arg) override {
    const auto id = static_cast<std::uint32_t>(arg);
    if (kind == kServe) {
      serve(id);
    } else {
      respond(id);
    }
  }

 private:
  static constexpr std::uint32_t kServe = 0;
  static constexpr std::uint32_t kRespond = 1;

  void drain_filter() {
    for (const auto& s : sf_->take_snoops()) {
      const auto id = pool_.acquire();
      auto& b = pool_[id];
      b.kind = PacketKind::BISnp;
      b.address = s.line;
      b.block_len = s.block_len;
      b.header_bytes = p_.header.for_packet(0);
      b.src = port_;
      b.dst = s.owner;
      b.ledger.start(engine_.now());
      net_.send(node_, id);
    }
    for (const auto& r : sf_->take_released()) {
      const auto id = static_cast<std::uint32_t>(r.token);
      SimTime ready = engine_.now();
      if (r.writeback) {
        // The flushed dirty line is written to media before the request runs.
        ++c_.flush_writes;
        ready = backend_->access(p_.interleave.local_address(pool_[id].address), true, ready + p_.controller_time);
      }
      auto& p = pool_[id];
      ++c_.snoop_waits;
      c_.snoop_wait_ns += ready - p.ledger.last();
      p.ledger.stamp(Stage::snoop, ready);
      engine_.schedule(ready, *this, kServe, id);
    }
  }

  void serve(std::uint32_t id) {
    auto& p = pool_[id];
    const bool is_write = p.kind == PacketKind::MemWr;
    const auto local = p_.interleave.local_address(p.address);
    SimTime ready = engine_.now() + p_.controller_time;
    if (p_.capacity_bytes != 0 && local >= p_.capacity_bytes) {
      ++c_.faults;
      p.error = true;
    } else {
      ready = backend_->access(local, is_write, ready);
      ++(is_write ? c_.writes : c_.reads);
    }
    p.ledger.stamp(Stage::endpoint, ready);
    engine_.schedule(ready, *this, kRespond, id);
  }

  void respond(std::uint32_t id) {
    auto& p = pool_[id];
    const bool was_read = p.kind == PacketKind::MemRd;
    p.kind = was_read ? PacketKind::RdResp : PacketKind::WrResp;
    p.payload_bytes = was_read && !p.error ? kLineBytes : 0;
    p.header_bytes = p_.header.for_packet(p.payload_bytes);
    p.request_hops = p.hop_count;
    p.hop_count = 0;
    std::swap(p.src, p.dst);
    net_.send(node_, id);
  }

  NodeId node_;
  PortId port_;
  Engine& engine_;
  Network& net_;
  PacketPool& pool_;
  EndpointParams p_;
  std::unique_ptr<MemoryBackend> backend_;
  std::optional<SnoopFilter> sf_;
  EndpointCounters c_;
};

}  // namespace cxlsim
