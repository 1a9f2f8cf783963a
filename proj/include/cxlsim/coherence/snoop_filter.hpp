#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cxlsim/coherence/victim_policy.hpp"
#include "cxlsim/devices/packet.hpp"
#include "cxlsim/fabric/ids.hpp"
#include "cxlsim/sim/error.hpp"

namespace cxlsim {

struct SfEntry {
  std::uint64_t line = 0;
  std::vector<PortId> owners;
  bool dirty_hint = false;
  std::uint64_t inserted_seq = 0;
  std::uint64_t last_touch_seq = 0;
};

struct SnoopFilterStats {
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t allocations = 0;
  std::uint64_t invalidations = 0;           // lines invalidated, conflicts + capacity
  std::uint64_t conflict_invalidations = 0;
  std::uint64_t capacity_invalidations = 0;
  std::uint64_t bisnp_sent = 0;
  std::uint64_t birsp_received = 0;
  std::uint64_t dirty_birsp = 0;
  std::uint64_t blocked_requests = 0;
};

// Inclusive, fully associative snoop filter for one endpoint.
//
// The filter is timing-free: the endpoint feeds it requests and BIRsps and
// drains two outboxes, BISnps to send and parked requests that may now
// proceed. Requests are identified by an opaque token.
class SnoopFilter {
 public:
  using Token = std::uint64_t;

  struct Snoop {
    PortId owner;
    std::uint64_t line;      // first line of the block
    std::uint8_t block_len;
  };

  struct Release {
    Token token;
    bool writeback;  // a dirty line was flushed for this request
  };

  struct Options {
    std::size_t capacity = 0;
    VictimPolicy policy;
    bool shared_reads = false;  // reads add owners instead of conflicting
  };

  explicit SnoopFilter(Options opt) : opt_(opt) {
    if (opt_.capacity == 0) throw ConfigError("sf_capacity must be at least 1");
    opt_.policy.validate();
  }

  const Options& options() const noexcept { return opt_; }
  std::size_t capacity() const noexcept { return opt_.capacity; }
  std::size_t occupancy() const noexcept { return entries_.size(); }
  const SnoopFilterStats& stats() const noexcept { return stats_; }
  std::uint64_t invalidation_count() const noexcept { return stats_.invalidations; }

  bool tracks(std::uint64_t line) const { return entries_.count(line) != 0; }
  const SfEntry* find(std::uint64_t line) const {
    auto it = entries_.find(line);
    return it == entries_.end() ? nullptr : &it->second;
  }
  const std::map<std::uint64_t, SfEntry>& entries() const noexcept { return entries_; }
  bool busy(std::uint64_t line) const { return pending_.count(line) != 0; }

  std::uint64_t insertion_count(std::uint64_t line) const {
    auto it = insertions_.find(line);
    return it == insertions_.end() ? 0 : it->second;
  }

  // Returns true when the request may proceed now; otherwise it is parked and
  // reappears in take_released() once its snoops complete.
  bool request(std::uint64_t line, PortId requester, bool is_write, Token token) {
    ++stats_.requests;
    const bool now = admit(line, Waiter{token, requester, is_write});
    if (!now) ++stats_.blocked_requests;
    return now;
  }

  void on_birsp(std::uint64_t line, PortId from, bool dirty) {
    ++stats_.birsp_received;
    if (dirty) ++stats_.dirty_birsp;
    auto it = pending_.find(line);
    if (it == pending_.end() || it->second.reason == Reason::allocate) {
      throw std::logic_error("unmatched BIRsp for line 0x" + hex(line) + " from " + to_string(from));
    }
    auto& out = it->second.outstanding;
    auto o = std::find(out.begin(), out.end(), from);
    if (o == out.end()) {
      throw std::logic_error("BIRsp for line 0x" + hex(line) + " from " + to_string(from) +
                             ", which was not snooped");
    }
    out.erase(o);
    it->second.dirty = it->second.dirty || dirty;
    auto& owners = entries_.at(line).owners;
    owners.erase(std::remove(owners.begin(), owners.end(), from), owners.end());
    if (out.empty()) complete(line);
  }

  std::vector<Snoop> take_snoops() { return std::exchange(snoops_, {}); }
  std::vector<Release> take_released() { return std::exchange(released_, {}); }

  // Victim lines the policy would pick now among entries not in a snoop
  // transaction; a single line except for block_length.
  std::vector<std::uint64_t> select_victim() const {
    const SfEntry* best = nullptr;
    auto better = [&](const SfEntry& e) {
      if (!best) return true;
      switch (opt_.policy.kind) {
        case VictimKind::fifo: return e.inserted_seq < best->inserted_seq;
        case VictimKind::lifo: return e.inserted_seq > best->inserted_seq;
        case VictimKind::lru: return e.last_touch_seq < best->last_touch_seq;
        case VictimKind::mru: return e.last_touch_seq > best->last_touch_seq;
        case VictimKind::lfi: {
          const auto a = insertion_count(e.line), b = insertion_count(best->line);
          return a != b ? a < b : e.inserted_seq > best->inserted_seq;
        }
        case VictimKind::block_length: return false;
      }
      return false;
    };
    if (opt_.policy.kind == VictimKind::block_length) return select_block();
    for (const auto& [line, e] : entries_) {
      if (!pending_.count(line) && better(e)) best = &e;
    }
    if (!best) return {};
    return {best->line};
  }

 private:
  enum class Reason : std::uint8_t { conflict, evict, allocate };

  struct Waiter {
    Token token;
    PortId requester;
    bool is_write;
  };

  struct Pending {
    Reason reason;
    Waiter waiter{};                 // conflict/allocate: the request being served
    std::vector<PortId> outstanding; // conflict/evict: owners yet to answer
    bool dirty = false;
    std::deque<Waiter> blocked;      // later requests for the same line
  };

  static std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return buf;
  }

  bool admit(std::uint64_t line, const Waiter& w) {
    if (auto p = pending_.find(line); p != pending_.end()) {
      p->second.blocked.push_back(w);
      return false;
    }
    if (auto it = entries_.find(line); it != entries_.end()) {
      auto& e = it->second;
      const bool owns = std::find(e.owners.begin(), e.owners.end(), w.requester) != e.owners.end();
      std::vector<PortId> others;
      for (auto o : e.owners) {
        if (o != w.requester) others.push_back(o);
      }
      const bool share = opt_.shared_reads && !w.is_write && !e.dirty_hint;
      if (others.empty() || share) {
        ++stats_.hits;
        if (!owns) e.owners.push_back(w.requester);
        e.last_touch_seq = ++clock_;
        e.dirty_hint = e.dirty_hint || w.is_write;
        return true;
      }
      Pending p{Reason::conflict, w, others, false, {}};
      for (auto o : others) {
        snoops_.push_back({o, line, 1});
        ++stats_.bisnp_sent;
      }
      ++stats_.invalidations;
      ++stats_.conflict_invalidations;
      pending_.emplace(line, std::move(p));
      return false;
    }
    if (entries_.size() < opt_.capacity && alloc_queue_.empty()) {
      allocate(line, w);
      return true;
    }
    pending_.emplace(line, Pending{Reason::allocate, w, {}, false, {}});
    alloc_queue_.push_back(line);
    ++untriggered_;
    pump_evictions();
    return false;
  }

  void allocate(std::uint64_t line, const Waiter& w) {
    SfEntry e;
    e.line = line;
    e.owners = {w.requester};
    e.dirty_hint = w.is_write;
    e.inserted_seq = e.last_touch_seq = ++clock_;
    entries_.emplace(line, std::move(e));
    ++insertions_[line];
    ++stats_.allocations;
  }

  // Every request that found the filter full selects one victim (a whole
  // block under block_length). Lines freed beyond what the waiters need stay
  // free for later requests.
  void pump_evictions() {
    while (untriggered_ > 0) {
      const auto victims = select_victim();
      if (victims.empty()) return;
      --untriggered_;
      const auto& owners = entries_.at(victims.front()).owners;
      for (auto o : owners) {
        snoops_.push_back({o, victims.front(), static_cast<std::uint8_t>(victims.size())});
        ++stats_.bisnp_sent;
      }
      for (auto v : victims) {
        pending_.emplace(v, Pending{Reason::evict, {}, entries_.at(v).owners, false, {}});
        ++stats_.invalidations;
        ++stats_.capacity_invalidations;
      }
    }
  }

  void complete(std::uint64_t line) {
    auto node = pending_.extract(line);
    Pending& p = node.mapped();
    if (p.reason == Reason::evict) {
      entries_.erase(line);
      grant_slot(p.dirty);
    } else {
      auto& e = entries_.at(line);
      if (std::find(e.owners.begin(), e.owners.end(), p.waiter.requester) == e.owners.end()) {
        e.owners.push_back(p.waiter.requester);
      }
      e.last_touch_seq = ++clock_;
      e.dirty_hint = p.waiter.is_write;
      released_.push_back({p.waiter.token, p.dirty});
    }
    readmit(line, p.blocked);
    pump_evictions();
  }

  // A freed entry goes to the oldest request waiting for one.
  void grant_slot(bool dirty) {
    if (alloc_queue_.empty()) return;
    const auto line = alloc_queue_.front();
    alloc_queue_.pop_front();
    untriggered_ = std::min(untriggered_, alloc_queue_.size());
    auto node = pending_.extract(line);
    allocate(line, node.mapped().waiter);
    released_.push_back({node.mapped().waiter.token, dirty});
    readmit(line, node.mapped().blocked);
  }

  void readmit(std::uint64_t line, std::deque<Waiter>& blocked) {
    while (!blocked.empty()) {
      const Waiter w = blocked.front();
      blocked.pop_front();
      if (admit(line, w)) released_.push_back({w.token, false});
    }
  }

  // Longest run of address-contiguous idle entries with identical owners,
  // capped at max_len; among equal lengths the run holding the most
  // recently inserted entry wins.
  std::vector<std::uint64_t> select_block() const {
    const std::size_t limit = opt_.policy.max_len;
    std::vector<const SfEntry*> run;
    std::size_t best_len = 0;
    std::uint64_t best_newest = 0;
    std::uint64_t best_start = 0;
    auto scan = [&]() {
      if (run.empty()) return;
      const auto k = std::min(limit, run.size());
      for (std::size_t j = 0; j + k <= run.size(); ++j) {
        std::uint64_t newest = 0;
        for (std::size_t i = j; i < j + k; ++i) newest = std::max(newest, run[i]->inserted_seq);
        if (k > best_len || (k == best_len && newest > best_newest)) {
          best_len = k;
          best_newest = newest;
          best_start = run[j]->line;
        }
      }
    };
    for (const auto& [line, e] : entries_) {
      if (pending_.count(line)) {
        scan();
        run.clear();
        continue;
      }
      if (!run.empty() && (run.back()->line + kLineBytes != line || run.back()->owners != e.owners)) {
        scan();
        run.clear();
      }
      run.push_back(&e);
    }
    scan();
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < best_len; ++i) out.push_back(best_start + i * kLineBytes);
    return out;
  }

  Options opt_;
  std::map<std::uint64_t, SfEntry> entries_;
  std::map<std::uint64_t, Pending> pending_;
  std::deque<std::uint64_t> alloc_queue_;
  std::size_t untriggered_ = 0;  // waiters that have not started an eviction
  std::unordered_map<std::uint64_t, std::uint64_t> insertions_;
  std::uint64_t clock_ = 0;
  std::vector<Snoop> snoops_;
  std::vector<Release> released_;
  SnoopFilterStats stats_;
};

}  // namespace cxlsim
