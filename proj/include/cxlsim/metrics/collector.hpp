#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cxlsim/devices/packet.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

struct HopGroupStats {
  std::uint64_t count = 0;
  std::array<std::uint64_t, kNumStages> stage_sum{};
  std::uint64_t total_sum = 0;
  SimTime total_max = 0;
  SimTime queuing_max = 0;

  double mean(Stage s) const {
    return count ? static_cast<double>(stage_sum[static_cast<std::size_t>(s)]) / static_cast<double>(count) : 0.0;
  }
  double mean_total() const { return count ? static_cast<double>(total_sum) / static_cast<double>(count) : 0.0; }
};

struct RequesterStats {
  std::uint64_t completed = 0;
  std::uint64_t fabric_bytes = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t latency_sum = 0;
  SimTime first_issue = kNever;
  SimTime last_completion = 0;

  SimTime window() const { return completed && last_completion > first_issue ? last_completion - first_issue : 0; }
  double bandwidth() const {
    const auto w = window();
    return w ? static_cast<double>(fabric_bytes) / static_cast<double>(w) : 0.0;
  }
  double mean_latency() const {
    return completed ? static_cast<double>(latency_sum) / static_cast<double>(completed) : 0.0;
  }
};

// Accumulates measured (post warm-up) transactions. The window opens at the
// first measured issue and closes at the last measured completion; the
// hooks let the system open and close bus accounting at the same instants.
class Collector {
 public:
  explicit Collector(std::size_t requesters = 0) : per_requester_(requesters) {}

  void expect(std::uint64_t measured_total) { expected_ = measured_total; }
  std::uint64_t expected() const noexcept { return expected_; }

  void on_open(std::function<void(SimTime)> fn) { open_hook_ = std::move(fn); }
  void on_close(std::function<void(SimTime)> fn) { close_hook_ = std::move(fn); }

  void issued(std::size_t requester, SimTime t, bool measured) {
    if (!measured) return;
    auto& r = per_requester_.at(requester);
    r.first_issue = std::min(r.first_issue, t);
    if (!open_) {
      open_ = true;
      window_start_ = t;
      if (open_hook_) open_hook_(t);
    }
  }

  // `fabric_bytes`: payload moved over the fabric by this transaction (64
  // for a read or write miss, 0 for a local cache hit).
  void completed(std::size_t requester, const Ledger& ledger, std::uint32_t hops, std::uint32_t fabric_bytes,
                 bool is_write, bool cache_hit, bool measured) {
    if (!measured) return;
    const SimTime t = ledger.last();
    const SimTime total = ledger.total();
    auto& r = per_requester_.at(requester);
    ++r.completed;
    r.fabric_bytes += fabric_bytes;
    r.latency_sum += total;
    r.last_completion = std::max(r.last_completion, t);
    if (cache_hit) ++r.cache_hits;

    ++completed_;
    fabric_bytes_ += fabric_bytes;
    latency_sum_ += total;
    latency_max_ = std::max(latency_max_, total);
    if (is_write) {
      ++writes_;
    } else {
      ++reads_;
    }
    if (cache_hit) ++cache_hits_;
    if (ledger[Stage::snoop] > 0) {
      ++snoop_waits_;
    }
    for (std::size_t s = 0; s < kNumStages; ++s) stage_sum_[s] += ledger.stages()[s];

    auto& g = groups_[hops];
    ++g.count;
    for (std::size_t s = 0; s < kNumStages; ++s) g.stage_sum[s] += ledger.stages()[s];
    g.total_sum += total;
    g.total_max = std::max(g.total_max, total);
    g.queuing_max = std::max(g.queuing_max, ledger[Stage::queuing]);

    last_completion_ = std::max(last_completion_, t);
    if (completed_ == expected_ && !closed_) {
      closed_ = true;
      if (close_hook_) close_hook_(last_completion_);
    }
  }

  bool closed() const noexcept { return closed_; }
  SimTime window_start() const noexcept { return window_start_; }
  SimTime window_end() const noexcept { return last_completion_; }
  SimTime window() const noexcept { return closed_ ? last_completion_ - window_start_ : 0; }

  std::uint64_t completed_count() const noexcept { return completed_; }
  std::uint64_t fabric_bytes() const noexcept { return fabric_bytes_; }
  std::uint64_t reads() const noexcept { return reads_; }
  std::uint64_t writes() const noexcept { return writes_; }
  std::uint64_t cache_hits() const noexcept { return cache_hits_; }
  std::uint64_t snoop_waits() const noexcept { return snoop_waits_; }
  std::uint64_t latency_sum() const noexcept { return latency_sum_; }
  SimTime latency_max() const noexcept { return latency_max_; }
  const std::array<std::uint64_t, kNumStages>& stage_sums() const noexcept { return stage_sum_; }
  const std::map<std::uint32_t, HopGroupStats>& hop_groups() const noexcept { return groups_; }
  const std::vector<RequesterStats>& requesters() const noexcept { return per_requester_; }

 private:
  std::vector<RequesterStats> per_requester_;
  std::uint64_t expected_ = 0;
  bool open_ = false;
  bool closed_ = false;
  SimTime window_start_ = 0;
  SimTime last_completion_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t fabric_bytes_ = 0;
  std::uint64_t reads_ = 0;
  std::uint64_t writes_ = 0;
  std::uint64_t cache_hits_ = 0;
  std::uint64_t snoop_waits_ = 0;
  std::uint64_t latency_sum_ = 0;
  SimTime latency_max_ = 0;
  std::array<std::uint64_t, kNumStages> stage_sum_{};
  std::map<std::uint32_t, HopGroupStats> groups_;
  std::function<void(SimTime)> open_hook_;
  std::function<void(SimTime)> close_hook_;
};

}  // namespace cxlsim
