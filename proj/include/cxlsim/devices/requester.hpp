#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cxlsim/coherence/local_cache.hpp"
#include "cxlsim/devices/interleave.hpp"
#include "cxlsim/devices/network.hpp"
#include "cxlsim/devices/packet.hpp"
#include "cxlsim/metrics/collector.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/workload/pattern.hpp"

namespace cxlsim {

struct RequesterParams {
  std::size_t queue_capacity = 64;
  SimTime issue_interval = 0;
  SimTime process_time = 10;
  SimTime cache_time = 12;
  std::size_t cache_lines = 0;  // 0: no local cache, requests bypass coherence
  std::uint64_t warmup_requests = 0;
  std::uint64_t measured_requests = 4000;
  InterleavePolicy interleave;
  HeaderModel header;
};

struct RequesterCounters {
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t bisnp_received = 0;
  std::uint64_t snooped_lines = 0;
  std::uint64_t invalidation_hits = 0;  // snooped lines found in the cache
  std::uint64_t dirty_flushes = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t poisoned_fills = 0;
  std::uint64_t error_responses = 0;
};

// Issues the request stream of one host or accelerator. Issue timing:
// process_time, then (with a cache) a lookup of cache_time; hits complete
// locally, misses become MemRd/MemWr packets toward the interleaved
// endpoint. At most queue_capacity requests are outstanding and issues are
// at least issue_interval apart.
class Requester final : public EventHandler, public Device {
 public:
  Requester(std::size_t index, NodeId node, PortId port, Engine& engine, Network& net, PacketPool& pool,
            Collector& metrics, RequesterParams params, RequestGenerator gen)
      : index_(index), node_(node), port_(port), engine_(engine), net_(net), pool_(pool), metrics_(metrics),
        p_(std::move(params)), gen_(std::move(gen)) {
    if (p_.queue_capacity == 0) throw ConfigError("requester queue_capacity must be at least 1");
    p_.interleave.validate();
    if (p_.cache_lines > 0) cache_.emplace(p_.cache_lines);
  }

  void start() { schedule_try(engine_.now()); }

  std::size_t index() const noexcept { return index_; }
  NodeId node() const noexcept { return node_; }
  PortId port() const noexcept { return port_; }
  const RequesterParams& params() const noexcept { return p_; }
  const RequesterCounters& counters() const noexcept { return c_; }
  std::size_t in_flight() const noexcept { return in_flight_; }
  std::uint64_t total_requests() const noexcept { return p_.warmup_requests + p_.measured_requests; }
  const std::optional<LocalCache>& cache() const noexcept { return cache_; }
  const std::vector<SimTime>& issue_times() const noexcept { return issue_log_; }
  void log_issues(bool on) { log_issues_ = on; }

  void receive(std::uint32_t id) override {
    auto& p = pool_[id];
    switch (p.kind) {
      case PacketKind::RdResp:
      case PacketKind::WrResp:
        on_response(id);
        break;
      case PacketKind::BISnp:
        on_bisnp(id);
        break;
      default:
        throw SimulationError(std::string("requester received ") + to_string(p.kind), engine_.now());
    }
  }

  void on_event(std::uint32_t kind, std::uint64_t arg) override {
    switch (kind) {
      case kTry:
        try_pending_ = false;
        try_issue();
        break;
      case kInject:
        inject(static_cast<std::uint32_t>(arg));
        break;
      case kBirsp:
        net_.send(node_, static_cast<std::uint32_t>(arg));
        break;
      default:
        break;
    }
  }

 private:
  static constexpr std::uint32_t kTry = 0;
  static constexpr std::uint32_t kInject = 1;
  static constexpr std::uint32_t kBirsp = 2;

  struct Txn {
    Request req;
    Ledger ledger;
    bool measured = false;
    bool poisoned = false;
  };

  void schedule_try(SimTime at) {
    if (try_pending_) return;
    try_pending_ = true;
    engine_.schedule(at, *this, kTry);
  }

  void try_issue() {
    while (c_.issued < total_requests() && in_flight_ < p_.queue_capacity) {
      const SimTime now = engine_.now();
      if (has_issued_ && now < last_issue_ + p_.issue_interval) {
        schedule_try(last_issue_ + p_.issue_interval);
        return;
      }
      issue(now);
    }
  }

  void issue(SimTime now) {
    const bool measured = c_.issued >= p_.warmup_requests;
    ++c_.issued;
    ++in_flight_;
    has_issued_ = true;
    last_issue_ = now;
    if (log_issues_) issue_log_.push_back(now);

    const auto t = alloc_txn();
    auto& x = txns_[t];
    x.req = gen_.next();
    x.req.address = line_of(x.req.address);
    x.measured = measured;
    x.poisoned = false;
    x.ledger.start(now);
    x.ledger.stamp(Stage::requester, now + p_.process_time);
    if (cache_) x.ledger.stamp(Stage::cache, x.ledger.last() + p_.cache_time);
    metrics_.issued(index_, now, measured);
    engine_.schedule(x.ledger.last(), *this, kInject, t);
  }

  void inject(std::uint32_t t) {
    auto& x = txns_[t];
    if (cache_ && cache_->access(x.req.address, x.req.is_write)) {
      ++c_.cache_hits;
      finish(t, 0, 0, true);
      return;
    }
    const auto id = pool_.acquire();
    auto& p = pool_[id];
    p.kind = x.req.is_write ? PacketKind::MemWr : PacketKind::MemRd;
    p.address = x.req.address;
    p.payload_bytes = x.req.is_write ? kLineBytes : 0;
    p.header_bytes = p_.header.for_packet(p.payload_bytes);
    p.src = port_;
    p.dst = p_.interleave.endpoint(p.address);
    p.cacheable = cache_.has_value();
    p.txn = t;
    p.ledger = x.ledger;
    if (cache_) fills_[x.req.address].push_back(t);
    net_.send(node_, id);
  }

  void on_response(std::uint32_t id) {
    auto& p = pool_[id];
    const auto t = p.txn;
    auto& x = txns_[t];
    x.ledger = p.ledger;
    const auto hops = p.request_hops;
    if (p.error) ++c_.error_responses;
    pool_.release(id);

    if (cache_) {
      auto& waiting = fills_[x.req.address];
      waiting.erase(std::find(waiting.begin(), waiting.end(), t));
      if (waiting.empty()) fills_.erase(x.req.address);
      if (x.poisoned) {
        ++c_.poisoned_fills;
      } else if (auto ev = cache_->install(x.req.address, x.req.is_write); ev && ev->dirty) {
        send_writeback(ev->line);
      }
    }
    finish(t, hops, kLineBytes, false);
  }

  void finish(std::uint32_t t, std::uint32_t hops, std::uint32_t fabric_bytes, bool hit) {
    auto& x = txns_[t];
    ++c_.completed;
    --in_flight_;
    metrics_.completed(index_, x.ledger, hops, fabric_bytes, x.req.is_write, hit, x.measured);
    free_.push_back(t);
    try_issue();
  }

  // Snooped lines are looked up one after another on the cache's snoop port;
  // each BIRsp leaves when its lookup finishes.
  void on_bisnp(std::uint32_t id) {
    const auto snoop = pool_[id];
    pool_.release(id);
    ++c_.bisnp_received;
    SimTime t = std::max(engine_.now(), snoop_busy_until_);
    for (std::uint32_t i = 0; i < snoop.block_len; ++i) {
      const auto line = snoop.address + std::uint64_t{i} * kLineBytes;
      ++c_.snooped_lines;
      bool dirty = false;
      if (cache_) {
        if (auto was = cache_->invalidate(line)) {
          ++c_.invalidation_hits;
          dirty = *was;
          if (dirty) ++c_.dirty_flushes;
        }
        if (auto f = fills_.find(line); f != fills_.end()) {
          for (auto ft : f->second) txns_[ft].poisoned = true;
        }
      }
      t += p_.cache_time;
      const auto rid = pool_.acquire();
      auto& r = pool_[rid];
      r.kind = PacketKind::BIRsp;
      r.address = line;
      r.dirty = dirty;
      r.payload_bytes = dirty ? kLineBytes : 0;
      r.header_bytes = p_.header.for_packet(r.payload_bytes);
      r.src = port_;
      r.dst = snoop.src;
      r.ledger.start(engine_.now());
      r.ledger.stamp(Stage::cache, t);
      engine_.schedule(t, *this, kBirsp, rid);
    }
    snoop_busy_until_ = t;
  }

  void send_writeback(std::uint64_t line) {
    ++c_.writebacks;
    const auto id = pool_.acquire();
    auto& p = pool_[id];
    p.kind = PacketKind::MemWr;
    p.address = line;
    p.payload_bytes = kLineBytes;
    p.header_bytes = p_.header.for_packet(p.payload_bytes);
    p.src = port_;
    p.dst = p_.interleave.endpoint(line);
    p.writeback = true;
    p.dirty = true;
    p.ledger.start(engine_.now());
    net_.send(node_, id);
  }

  std::uint32_t alloc_txn() {
    if (!free_.empty()) {
      const auto t = free_.back();
      free_.pop_back();
      return t;
    }
    txns_.emplace_back();
    return static_cast<std::uint32_t>(txns_.size() - 1);
  }

  std::size_t index_;
  NodeId node_;
  PortId port_;
  Engine& engine_;
  Network& net_;
  PacketPool& pool_;
  Collector& metrics_;
  RequesterParams p_;
  RequestGenerator gen_;
  std::optional<LocalCache> cache_;
  RequesterCounters c_;

  std::vector<Txn> txns_;
  std::vector<std::uint32_t> free_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> fills_;
  std::size_t in_flight_ = 0;
  bool has_issued_ = false;
  bool try_pending_ = false;
  SimTime last_issue_ = 0;
  SimTime snoop_busy_until_ = 0;
  bool log_issues_ = false;
  std::vector<SimTime> issue_log_;
};

}  // namespace cxlsim
