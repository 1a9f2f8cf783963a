#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cxlsim/devices/packet.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

struct HopGroupSummary {
  std::uint32_t hops = 0;
  std::uint64_t count = 0;
  std::array<double, kNumStages> mean{};
  double mean_total = 0.0;
  SimTime max_total = 0;
  SimTime max_queuing = 0;
};

struct BusSummary {
  std::size_t link = 0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  bool full_duplex = true;
  double bandwidth = 0.0;
  double utility = 0.0;
  std::array<double, 2> direction_utility{};
  std::optional<double> efficiency;
  std::array<std::optional<double>, 2> direction_efficiency;
  std::array<std::uint64_t, 2> packets{};
};

struct RequesterSummary {
  std::size_t index = 0;
  std::uint32_t port = 0;
  std::uint64_t completed = 0;
  std::uint64_t cache_hits = 0;
  double bandwidth = 0.0;
  double normalized_bandwidth = 0.0;
  double mean_latency = 0.0;
};

struct RunSummary {
  std::string label;
  std::uint64_t seed = 0;
  std::uint64_t requests_measured = 0;
  SimTime window_ns = 0;
  double aggregate_bandwidth = 0.0;   // fabric payload bytes per ns
  double norm_base = 0.0;             // bytes per ns of one port
  double normalized_bandwidth = 0.0;
  double served_bandwidth = 0.0;      // 64 B per completed request, cache hits included
  double mean_latency = 0.0;
  SimTime max_latency = 0;
  std::array<double, kNumStages> mean_stage{};
  std::uint64_t invalidation_count = 0;
  std::uint64_t bisnp_sent = 0;
  std::uint64_t invalidation_hits = 0;
  double mean_invalidation_wait = 0.0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t cache_hits = 0;
  double mix_degree = 0.0;
  std::uint64_t faults = 0;
  std::uint64_t events = 0;
  std::vector<HopGroupSummary> hop_groups;
  std::vector<BusSummary> buses;
  std::vector<RequesterSummary> requesters;

  double mean_bus_utility() const {
    if (buses.empty()) return 0.0;
    double s = 0.0;
    for (const auto& b : buses) s += b.utility;
    return s / static_cast<double>(buses.size());
  }
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_summary_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  using detail::fmt;
  os << "label,seed,requests_measured,window_ns,aggregate_bandwidth,norm_base,normalized_bandwidth,"
        "served_bandwidth,mean_latency,max_latency";
  for (std::size_t s = 0; s < kNumStages; ++s) os << ",mean_" << to_string(static_cast<Stage>(s));
  os << ",invalidation_count,bisnp_sent,invalidation_hits,mean_invalidation_wait,reads,writes,cache_hits,"
        "mix_degree,mean_bus_utility,faults\n";
  for (const auto& r : runs) {
    os << detail::csv_field(r.label) << ',' << r.seed << ',' << r.requests_measured << ',' << r.window_ns << ','
       << fmt(r.aggregate_bandwidth) << ',' << fmt(r.norm_base) << ',' << fmt(r.normalized_bandwidth) << ','
       << fmt(r.served_bandwidth) << ',' << fmt(r.mean_latency) << ',' << r.max_latency;
    for (auto v : r.mean_stage) os << ',' << fmt(v);
    os << ',' << r.invalidation_count << ',' << r.bisnp_sent << ',' << r.invalidation_hits << ','
       << fmt(r.mean_invalidation_wait) << ',' << r.reads << ',' << r.writes << ',' << r.cache_hits << ','
       << fmt(r.mix_degree) << ',' << fmt(r.mean_bus_utility()) << ',' << r.faults << '\n';
  }
}

inline void write_latency_by_hops_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  using detail::fmt;
  os << "label,seed,hop_count,count";
  for (std::size_t s = 0; s < kNumStages; ++s) os << ',' << to_string(static_cast<Stage>(s));
  os << ",mean,max,max_queuing\n";
  for (const auto& r : runs) {
    for (const auto& g : r.hop_groups) {
      os << detail::csv_field(r.label) << ',' << r.seed << ',' << g.hops << ',' << g.count;
      for (auto v : g.mean) os << ',' << fmt(v);
      os << ',' << fmt(g.mean_total) << ',' << g.max_total << ',' << g.max_queuing << '\n';
    }
  }
}

inline void write_bus_stats_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  using detail::fmt;
  os << "label,seed,link,a,b,duplex,bandwidth,utility,utility_ab,utility_ba,efficiency,efficiency_ab,"
        "efficiency_ba,packets_ab,packets_ba\n";
  for (const auto& r : runs) {
    for (const auto& b : r.buses) {
      os << detail::csv_field(r.label) << ',' << r.seed << ',' << b.link << ',' << b.a << ',' << b.b << ','
         << (b.full_duplex ? "full" : "half") << ',' << fmt(b.bandwidth) << ',' << fmt(b.utility) << ','
         << fmt(b.direction_utility[0]) << ',' << fmt(b.direction_utility[1]) << ',' << fmt(b.efficiency) << ','
         << fmt(b.direction_efficiency[0]) << ',' << fmt(b.direction_efficiency[1]) << ',' << b.packets[0] << ','
         << b.packets[1] << '\n';
    }
  }
}

inline void write_requester_stats_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  using detail::fmt;
  os << "label,seed,requester,port,completed,cache_hits,bandwidth,normalized_bandwidth,mean_latency\n";
  for (const auto& r : runs) {
    for (const auto& q : r.requesters) {
      os << detail::csv_field(r.label) << ',' << r.seed << ',' << q.index << ',' << q.port << ',' << q.completed
         << ',' << q.cache_hits << ',' << fmt(q.bandwidth) << ',' << fmt(q.normalized_bandwidth) << ','
         << fmt(q.mean_latency) << '\n';
    }
  }
}

}  // namespace cxlsim
