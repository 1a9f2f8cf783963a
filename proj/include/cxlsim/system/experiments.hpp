#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cxlsim/metrics/summary.hpp"
#include "cxlsim/sim/rng.hpp"
#include "cxlsim/system/config.hpp"
#include "cxlsim/system/simulation.hpp"
#include "cxlsim/workload/trace.hpp"

namespace cxlsim {

// Synthetic trace a point replays; prepare() writes it to the trace path.
struct SyntheticTraceSpec {
  std::uint64_t count = 0;
  double write_fraction = 0.0;
  std::uint64_t footprint_bytes = 0;
};

struct ExperimentPoint {
  ExperimentPoint(std::string l, SystemConfig c, std::optional<SyntheticTraceSpec> t = std::nullopt)
      : label(std::move(l)), config(std::move(c)), trace(t) {}

  std::string label;
  SystemConfig config;
  std::optional<SyntheticTraceSpec> trace;
};

struct Experiment {
  std::string name;
  std::vector<ExperimentPoint> points;
};

// Knobs shared by every preset. Zero means "preset default".
struct PresetOptions {
  std::uint32_t scale = 0;          // requesters + endpoints
  std::uint64_t seed = 1;
  std::uint32_t repeat = 1;
  std::string output_dir = "out";
  double bisection_target = 16.0;   // iso_bisection only, bytes per ns
  std::uint64_t requests = 0;       // measured requests per requester
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"topology_sweep", "iso_bisection",  "routing_noisy_neighbors",
                                              "victim_policies", "invblk_sweep",   "duplex_rwmix",
                                              "trace_replay",    "loaded_latency"};
  return names;
}

namespace detail {

inline SystemConfig base_config(const std::string& name, const PresetOptions& o) {
  SystemConfig c;
  c.name = name;
  c.seed = o.seed;
  c.repeat = o.repeat;
  c.output_dir = o.output_dir;
  return c;
}

inline std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void scaled_fabric(SystemConfig& c, TopologyKind kind, std::uint32_t scale, const PresetOptions& o) {
  if (scale < 2 || scale % 2 != 0) throw ConfigError("preset: --scale must be an even number >= 2");
  const std::uint32_t half = scale / 2;
  c.topology.kind = kind;
  c.topology.requesters = half;
  c.topology.endpoints = half;
  c.requester.queue_capacity = 256;
  c.workload.kind = PatternKind::uniform;
  c.workload.total_requests = o.requests ? o.requests : 4000ull * half;
  c.workload.warmup_requests = c.workload.total_requests;
}

inline const TopologyKind kSweepKinds[] = {TopologyKind::chain, TopologyKind::tree, TopologyKind::ring,
                                           TopologyKind::spine_leaf, TopologyKind::fully_connected};

inline Experiment topology_sweep(const PresetOptions& o) {
  Experiment e{"topology_sweep", {}};
  std::vector<std::uint32_t> scales{4, 8, 12, 16};
  if (o.scale) scales = {o.scale};
  for (auto s : scales) {
    for (auto k : kSweepKinds) {
      if (k == TopologyKind::ring && s < 5) continue;  // a ring needs three switches
      auto c = base_config("topology_sweep", o);
      scaled_fabric(c, k, s, o);
      // Closed-loop requesters run at unequal rates here (ring under static
      // routing), so a per-requester warm-up would leave slow requesters'
      // warm-up traffic inside the window uncounted.
      c.workload.warmup_requests = 0;
      e.points.push_back({std::string(to_string(k)) + "/s" + std::to_string(s), c});
    }
  }
  return e;
}

inline Experiment iso_bisection(const PresetOptions& o) {
  Experiment e{"iso_bisection", {}};
  const std::uint32_t s = o.scale ? o.scale : 16;
  for (auto k : kSweepKinds) {
    auto c = base_config("iso_bisection", o);
    scaled_fabric(c, k, s, o);
    c.topology.bisection_target = o.bisection_target;
    c.normalize_bandwidth = o.bisection_target;
    // Quarter of the equalized capacity, spread evenly over the requesters.
    c.requester.queue_capacity = 1024;
    c.requester.issue_interval =
        static_cast<SimTime>(4.0 * kLineBytes * c.topology.requesters / o.bisection_target + 0.5);
    e.points.push_back({std::string(to_string(k)) + "/s" + std::to_string(s), c});
  }
  return e;
}

// Requester 0 is the observed host issuing at a fixed rate; the others are
// noisy neighbors with deep queues and no issue gap.
inline Experiment routing_noisy_neighbors(const PresetOptions& o) {
  Experiment e{"routing_noisy_neighbors", {}};
  const std::uint32_t endpoints = o.scale ? o.scale / 2 : 8;
  for (auto mode : {RoutingMode::oblivious, RoutingMode::adaptive}) {
    auto c = base_config("routing_noisy_neighbors", o);
    c.topology.kind = TopologyKind::spine_leaf;
    c.topology.requesters = endpoints + 1;
    c.topology.endpoints = endpoints;
    c.routing = mode;
    c.workload.kind = PatternKind::uniform;
    c.requester.queue_capacity = 256;
    c.workload.total_requests = o.requests ? o.requests : 4000ull * endpoints;
    c.workload.warmup_requests = c.workload.total_requests / 4;
    RequesterOverride host;
    host.index = 0;
    host.queue_capacity = 64;
    host.issue_interval = 8;
    host.total_requests = c.workload.total_requests / 2;
    host.warmup_requests = c.workload.warmup_requests / 2;
    c.overrides.push_back(host);
    e.points.push_back({to_string(mode), c});
  }
  return e;
}

inline SystemConfig coherent_single(const std::string& name, const PresetOptions& o) {
  auto c = base_config(name, o);
  c.topology.kind = TopologyKind::chain;
  c.topology.requesters = 1;
  c.topology.endpoints = 1;
  c.link.bandwidth = 1.0e6;  // serialization rounds up to one tick
  c.coherence.enabled = true;
  const std::uint64_t footprint = 256ull << 10;
  const std::uint64_t lines = footprint / kLineBytes;
  c.workload.footprint_bytes = footprint;
  c.requester.cache_lines = lines / 5;
  c.coherence.sf_capacity = c.requester.cache_lines;
  c.requester.queue_capacity = 16;
  c.workload.total_requests = o.requests ? o.requests : 16000;
  c.workload.warmup_requests = c.workload.total_requests;
  return c;
}

inline Experiment victim_policies(const PresetOptions& o) {
  Experiment e{"victim_policies", {}};
  for (auto k : {VictimKind::fifo, VictimKind::lru, VictimKind::lfi, VictimKind::lifo, VictimKind::mru}) {
    auto c = coherent_single("victim_policies", o);
    c.workload.kind = PatternKind::skewed;
    c.workload.hot_fraction = 0.10;
    c.workload.hot_prob = 0.90;
    c.workload.read_ratio = 0.5;
    c.coherence.policy.kind = k;
    e.points.push_back({to_string(k), c});
  }
  return e;
}

inline Experiment invblk_sweep(const PresetOptions& o) {
  Experiment e{"invblk_sweep", {}};
  for (std::uint32_t len = 1; len <= VictimPolicy::kMaxBlock; ++len) {
    auto c = coherent_single("invblk_sweep", o);
    c.topology.requesters = 2;
    c.workload.kind = PatternKind::stream;
    c.workload.partition = true;
    c.workload.read_ratio = 0.5;
    c.coherence.policy.kind = VictimKind::block_length;
    c.coherence.policy.max_len = len;
    e.points.push_back({"len" + std::to_string(len), c});
  }
  return e;
}

inline Experiment duplex_rwmix(const PresetOptions& o) {
  Experiment e{"duplex_rwmix", {}};
  const std::uint32_t endpoints = o.scale ? std::max<std::uint32_t>(1, o.scale - 1) : 4;
  const std::pair<const char*, double> mixes[] = {{"1:0", 1.0}, {"3:1", 0.75}, {"1:1", 0.5}};
  for (auto duplex : {Duplex::full, Duplex::half}) {
    for (double header : {0.0, 0.25, 0.5, 1.0}) {
      for (const auto& [name, ratio] : mixes) {
        auto c = base_config("duplex_rwmix", o);
        c.topology.kind = TopologyKind::chain;
        c.topology.requesters = 1;
        c.topology.endpoints = endpoints;
        c.link.duplex = duplex;
        c.header.overhead = header;
        c.requester.queue_capacity = 256;
        c.workload.kind = PatternKind::uniform;
        c.workload.read_ratio = ratio;
        c.workload.total_requests = o.requests ? o.requests : 4000ull * endpoints;
        c.workload.warmup_requests = c.workload.total_requests;
        e.points.push_back({std::string(duplex == Duplex::full ? "full" : "half") + "/h" + fixed(header, 2) +
                                "/" + name,
                            c});
      }
    }
  }
  return e;
}

// Synthetic traces with mix degree 0 to 0.5 in steps of 0.05, written under
// <output_dir>/traces when the experiment is prepared.
inline Experiment trace_replay(const PresetOptions& o) {
  Experiment e{"trace_replay", {}};
  const std::uint64_t n = o.requests ? o.requests : 16000;
  for (int step = 0; step <= 10; ++step) {
    const double mix = 0.05 * step;
    auto c = base_config("trace_replay", o);
    c.topology.kind = TopologyKind::chain;
    c.topology.requesters = 1;
    c.topology.endpoints = 4;
    c.requester.queue_capacity = 256;
    c.workload.kind = PatternKind::trace;
    c.workload.total_requests = 0;
    c.workload.warmup_requests = 0;
    c.workload.trace_path = (std::filesystem::path(o.output_dir) / "traces" /
                             ("mix_" + fixed(mix, 2) + "_n" + std::to_string(n) + ".trace"))
                                .string();
    e.points.push_back({"mix" + fixed(mix, 2), c, SyntheticTraceSpec{n, mix, 1ull << 20}});
  }
  return e;
}

inline Experiment loaded_latency(const PresetOptions& o) {
  Experiment e{"loaded_latency", {}};
  for (SimTime gap : {400, 200, 100, 50, 25, 12, 8, 6, 5, 4, 2, 0}) {
    auto c = base_config("loaded_latency", o);
    c.topology.kind = TopologyKind::chain;
    c.topology.requesters = 1;
    c.topology.endpoints = o.scale ? std::max<std::uint32_t>(1, o.scale - 1) : 4;
    c.requester.queue_capacity = 256;
    c.requester.issue_interval = gap;
    c.workload.kind = PatternKind::uniform;
    c.workload.total_requests = o.requests ? o.requests : 16000;
    c.workload.warmup_requests = c.workload.total_requests;
    e.points.push_back({"gap" + std::to_string(gap), c});
  }
  return e;
}

}  // namespace detail

inline Experiment make_preset(const std::string& name, const PresetOptions& o = {}) {
  if (name == "topology_sweep") return detail::topology_sweep(o);
  if (name == "iso_bisection") return detail::iso_bisection(o);
  if (name == "routing_noisy_neighbors") return detail::routing_noisy_neighbors(o);
  if (name == "victim_policies") return detail::victim_policies(o);
  if (name == "invblk_sweep") return detail::invblk_sweep(o);
  if (name == "duplex_rwmix") return detail::duplex_rwmix(o);
  if (name == "trace_replay") return detail::trace_replay(o);
  if (name == "loaded_latency") return detail::loaded_latency(o);
  std::string all;
  for (const auto& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "'; available: " + all);
}

// Writes every synthetic trace the points refer to. Trace content depends
// only on its spec, so rewriting an existing file is harmless.
inline void prepare(const Experiment& e) {
  for (const auto& p : e.points) {
    if (!p.trace) continue;
    const auto& w = p.config.workload;
    Rng rng(0x7ace);
    auto records = synthetic_trace(p.trace->count, p.trace->write_fraction, p.trace->footprint_bytes, rng);
    std::filesystem::create_directories(std::filesystem::path(w.trace_path).parent_path());
    std::ofstream os(w.trace_path);
    if (!os) throw ConfigError("cannot write trace '" + w.trace_path + "'");
    write_trace(os, records);
  }
}

// A run file is either a full system config (one point) or a preset
// reference: {"preset": name, "scale", "seed", "repeat", "output_dir",
// "bisection_target", "requests"}.
inline Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("preset")) {
    PresetOptions o;
    std::string name;
    {
      detail::ObjectReader r(j, "");
      r.read("preset", name);
      r.read("scale", o.scale);
      r.read("seed", o.seed);
      r.read("repeat", o.repeat);
      r.read("output_dir", o.output_dir);
      r.read("bisection_target", o.bisection_target);
      r.read("requests", o.requests);
    }
    return make_preset(name, o);
  }
  const auto base = std::filesystem::path(path).parent_path().string();
  auto c = parse_config(j, base);
  return Experiment{c.name, {ExperimentPoint{c.name, c}}};
}

struct RunJob {
  std::string label;
  const SystemConfig* config = nullptr;
  std::uint64_t seed = 0;
};

// Runs every point `repeat` times (seed, seed+1, ...). Results come back in
// point-major order whatever the number of worker threads.
inline std::vector<RunSummary> run_points(const std::vector<ExperimentPoint>& points, unsigned jobs = 1) {
  std::vector<RunJob> work;
  for (const auto& p : points) {
    for (std::uint32_t r = 0; r < std::max<std::uint32_t>(1, p.config.repeat); ++r) {
      work.push_back({p.label, &p.config, p.config.seed + r});
    }
  }
  std::vector<RunSummary> out(work.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= work.size()) return;
      try {
        out[i] = simulate(*work[i].config, work[i].seed, work[i].label);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!error) error = std::current_exception();
        next = work.size();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

inline std::vector<RunSummary> run_experiment(const Experiment& e, unsigned jobs = 1) {
  prepare(e);
  return run_points(e.points, jobs);
}

// Writes the four CSV tables into `dir`.
inline void write_outputs(const std::string& dir, const std::vector<RunSummary>& runs) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os) throw ConfigError("cannot write " + (std::filesystem::path(dir) / name).string());
    return os;
  };
  {
    auto os = open("summary.csv");
    write_summary_csv(os, runs);
  }
  {
    auto os = open("latency_by_hops.csv");
    write_latency_by_hops_csv(os, runs);
  }
  {
    auto os = open("bus_stats.csv");
    write_bus_stats_csv(os, runs);
  }
  {
    auto os = open("requester_stats.csv");
    write_requester_stats_csv(os, runs);
  }
}

}  // namespace cxlsim
