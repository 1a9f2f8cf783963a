#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cxlsim/devices/backend.hpp"
#include "cxlsim/devices/endpoint.hpp"
#include "cxlsim/devices/network.hpp"
#include "cxlsim/devices/requester.hpp"
#include "cxlsim/fabric/bisection.hpp"
#include "cxlsim/fabric/graph.hpp"
#include "cxlsim/fabric/presets.hpp"
#include "cxlsim/fabric/routing.hpp"
#include "cxlsim/metrics/collector.hpp"
#include "cxlsim/metrics/summary.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/sim/rng.hpp"
#include "cxlsim/system/config.hpp"
#include "cxlsim/workload/trace.hpp"

namespace cxlsim {

// Link list for a configuration, with iso-bisection scaling applied.
inline TopologySpec topology_spec(const SystemConfig& c) {
  TopologySpec spec;
  const auto& t = c.topology;
  if (t.use_preset) {
    TopologyParams params;
    params.spines = t.spines;
    params.fanout = t.fanout;
    params.switch_ports = t.switch_ports;
    params.link.bandwidth = c.link.bandwidth;
    params.link.duplex = c.link.duplex;
    params.link.turnaround = c.link.turnaround;
    params.link.propagation = c.latency.bus;
    spec = make_topology(t.kind, t.requesters, t.endpoints, params);
  } else {
    spec.roles = t.nodes;
    spec.links = t.links;
    spec.switch_ports = t.switch_ports;
  }
  if (t.bisection_target > 0.0) {
    const double current = bisection_bandwidth(build_graph(spec));
    const double scale = t.bisection_target / current;
    for (auto& l : spec.links) l.bandwidth *= scale;
  }
  return spec;
}

// One simulation instance: topology, devices, engine and metrics.
class Simulation {
 public:
  explicit Simulation(const SystemConfig& cfg, std::optional<std::uint64_t> seed = std::nullopt)
      : cfg_(cfg), seed_(seed.value_or(cfg.seed)), graph_(build_graph(topology_spec(cfg))),
        table_(RoutingTable::build(graph_)),
        net_(engine_, graph_, table_, pool_, Network::Timing{cfg.latency.switching, cfg.latency.port}, cfg.routing) {
    build();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  Engine& engine() noexcept { return engine_; }
  Network& network() noexcept { return net_; }
  const TopologyGraph& graph() const noexcept { return graph_; }
  const RoutingTable& routing() const noexcept { return table_; }
  const Collector& collector() const noexcept { return metrics_; }
  const PacketPool& packets() const noexcept { return pool_; }
  std::vector<std::unique_ptr<Requester>>& requesters() noexcept { return requesters_; }
  std::vector<std::unique_ptr<Endpoint>>& endpoints() noexcept { return endpoints_; }
  const SystemConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double norm_base() const {
    if (cfg_.normalize_bandwidth > 0) return cfg_.normalize_bandwidth;
    return cfg_.link.bandwidth;
  }

  RunSummary run(const std::string& label = "") {
    for (auto& r : requesters_) r->start();
    engine_.run();
    verify_quiescent();
    if (cfg_.check_invariants) check_inclusive();
    return summarize(label.empty() ? cfg_.name : label);
  }

  // Every line held in a requester cache is tracked, with that requester as
  // an owner, by the snoop filter of the endpoint that homes it.
  void check_inclusive() const {
    for (const auto& r : requesters_) {
      if (!r->cache()) continue;
      r->cache()->for_each_line([&](std::uint64_t line) {
        const auto port = r->params().interleave.endpoint(line);
        const auto& ep = endpoint_by_port(port);
        const auto& sf = ep.snoop_filter();
        if (!sf) return;
        const auto* e = sf->find(line);
        const bool owner = e && std::find(e->owners.begin(), e->owners.end(), r->port()) != e->owners.end();
        if (!owner) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(line));
          throw SimulationError("inclusivity violated: line 0x" + std::string(buf) + " cached by " +
                                    to_string(r->port()) + " but not tracked by " + to_string(port),
                                engine_.now());
        }
      });
    }
  }

 private:
  void build() {
    const auto req_nodes = graph_.nodes_with_role(NodeRole::requester);
    const auto ep_nodes = graph_.nodes_with_role(NodeRole::endpoint);
    if (req_nodes.empty()) throw ConfigError("topology has no requesters");
    if (ep_nodes.empty()) throw ConfigError("topology has no endpoints");

    InterleavePolicy interleave;
    interleave.granularity = cfg_.requester.interleave_granularity;
    for (auto n : ep_nodes) interleave.endpoints.push_back(graph_.port_of(n));
    interleave.validate();

    std::vector<TraceRecord> trace;
    if (cfg_.workload.kind == PatternKind::trace) {
      trace = load_trace(cfg_.workload.trace_path).records;
      if (trace.empty()) throw ConfigError("workload.trace: '" + cfg_.workload.trace_path + "' has no records");
    }

    metrics_ = Collector(req_nodes.size());
    Rng master(seed_);
    std::uint64_t expected = 0;
    const auto n = req_nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
      RequesterParams p;
      p.queue_capacity = cfg_.requester.queue_capacity;
      p.issue_interval = cfg_.requester.issue_interval;
      p.process_time = cfg_.latency.requester;
      p.cache_time = cfg_.latency.cache;
      p.cache_lines = cfg_.requester.cache_lines;
      p.interleave = interleave;
      p.header = cfg_.header;
      PatternSpec spec = cfg_.workload;
      for (const auto& o : cfg_.overrides) {
        if (o.index != i) continue;
        if (o.queue_capacity) p.queue_capacity = *o.queue_capacity;
        if (o.issue_interval) p.issue_interval = *o.issue_interval;
        if (o.cache_lines) p.cache_lines = *o.cache_lines;
        if (o.total_requests) spec.total_requests = *o.total_requests;
        if (o.warmup_requests) spec.warmup_requests = *o.warmup_requests;
        if (o.read_ratio) spec.read_ratio = *o.read_ratio;
      }
      p.warmup_requests = spec.warmup_requests;
      p.measured_requests = spec.total_requests;
      if (spec.kind == PatternKind::trace && spec.total_requests == 0) {
        p.measured_requests = trace.size() > p.warmup_requests ? trace.size() - p.warmup_requests : 0;
      }
      std::uint64_t base = 0, bytes = spec.footprint_bytes;
      if (spec.partition) {
        bytes = std::max<std::uint64_t>(kLineBytes, spec.footprint_bytes / n / kLineBytes * kLineBytes);
        base = bytes * i;
      }
      RequestGenerator gen(spec, base, bytes, master.fork(i), trace);
      if (p.cache_lines > 0 && !cfg_.coherence.enabled) {
        throw ConfigError("requester caches need coherence.enabled (inclusive snoop filters at the endpoints)");
      }
      expected += p.measured_requests;
      requesters_.push_back(std::make_unique<Requester>(i, req_nodes[i], graph_.port_of(req_nodes[i]), engine_,
                                                        net_, pool_, metrics_, p, std::move(gen)));
      net_.attach(req_nodes[i], requesters_.back().get());
    }

    for (auto node : ep_nodes) {
      EndpointParams p;
      p.controller_time = cfg_.latency.controller;
      p.capacity_bytes = cfg_.endpoint.capacity_bytes;
      p.interleave = interleave;
      p.header = cfg_.header;
      std::optional<SnoopFilter::Options> sf;
      if (cfg_.coherence.enabled) {
        sf = SnoopFilter::Options{static_cast<std::size_t>(cfg_.coherence.sf_capacity), cfg_.coherence.policy,
                                  cfg_.coherence.shared_reads};
      }
      endpoints_.push_back(std::make_unique<Endpoint>(node, graph_.port_of(node), engine_, net_, pool_, p,
                                                      std::make_unique<FixedLatencyBackend>(cfg_.latency.access),
                                                      sf));
      net_.attach(node, endpoints_.back().get());
    }

    metrics_.expect(expected);
    metrics_.on_open([this](SimTime t) { net_.open_window(t); });
    metrics_.on_close([this](SimTime t) { net_.close_window(t); });

    if (cfg_.check_invariants) {
      engine_.set_trace([this](const Event&) { check_inclusive(); });
    }
  }

  const Endpoint& endpoint_by_port(PortId port) const {
    for (const auto& e : endpoints_) {
      if (e->port() == port) return *e;
    }
    throw SimulationError("no endpoint at " + to_string(port), engine_.now());
  }

  void verify_quiescent() const {
    for (const auto& r : requesters_) {
      if (r->in_flight() != 0 || r->counters().completed != r->total_requests()) {
        throw SimulationError("requester " + std::to_string(r->index()) + " finished with " +
                                  std::to_string(r->counters().completed) + " of " +
                                  std::to_string(r->total_requests()) + " requests complete",
                              engine_.now());
      }
    }
    if (pool_.live() != 0) {
      throw SimulationError(std::to_string(pool_.live()) + " packets still in the fabric at quiescence",
                            engine_.now());
    }
  }

  RunSummary summarize(const std::string& label) const {
    RunSummary s;
    s.label = label;
    s.seed = seed_;
    s.events = engine_.fired();
    const auto& m = metrics_;
    s.requests_measured = m.completed_count();
    s.window_ns = m.window();
    const double w = static_cast<double>(s.window_ns);
    s.norm_base = norm_base();
    if (s.window_ns > 0) {
      s.aggregate_bandwidth = static_cast<double>(m.fabric_bytes()) / w;
      s.served_bandwidth = static_cast<double>(m.completed_count() * kLineBytes) / w;
    }
    s.normalized_bandwidth = s.aggregate_bandwidth / s.norm_base;
    const double count = static_cast<double>(std::max<std::uint64_t>(1, m.completed_count()));
    s.mean_latency = static_cast<double>(m.latency_sum()) / count;
    s.max_latency = m.latency_max();
    for (std::size_t i = 0; i < kNumStages; ++i) s.mean_stage[i] = static_cast<double>(m.stage_sums()[i]) / count;
    s.mean_invalidation_wait = s.mean_stage[static_cast<std::size_t>(Stage::snoop)];
    s.reads = m.reads();
    s.writes = m.writes();
    s.cache_hits = m.cache_hits();
    if (m.completed_count() > 0) {
      s.mix_degree = static_cast<double>(std::min(s.reads, s.writes)) / static_cast<double>(m.completed_count());
    }
    for (const auto& e : endpoints_) {
      s.faults += e->counters().faults;
      if (e->snoop_filter()) {
        s.invalidation_count += e->snoop_filter()->stats().invalidations;
        s.bisnp_sent += e->snoop_filter()->stats().bisnp_sent;
      }
    }
    for (const auto& r : requesters_) s.invalidation_hits += r->counters().invalidation_hits;

    for (const auto& [hops, g] : m.hop_groups()) {
      HopGroupSummary h;
      h.hops = hops;
      h.count = g.count;
      for (std::size_t i = 0; i < kNumStages; ++i) h.mean[i] = g.mean(static_cast<Stage>(i));
      h.mean_total = g.mean_total();
      h.max_total = g.total_max;
      h.max_queuing = g.queuing_max;
      s.hop_groups.push_back(h);
    }

    for (std::size_t i = 0; i < net_.buses().size(); ++i) {
      const auto& b = net_.buses()[i];
      BusSummary x;
      x.link = i;
      x.a = b.link().a.value;
      x.b = b.link().b.value;
      x.full_duplex = b.full_duplex();
      x.bandwidth = b.link().bandwidth;
      x.utility = b.utility(s.window_ns);
      for (int d = 0; d < 2; ++d) {
        x.direction_utility[d] = b.direction_utility(d, s.window_ns);
        const double e = b.direction_efficiency(d);
        if (e >= 0) x.direction_efficiency[d] = e;
        x.packets[d] = b.packets(d);
      }
      if (b.efficiency() >= 0) x.efficiency = b.efficiency();
      s.buses.push_back(x);
    }

    for (std::size_t i = 0; i < requesters_.size(); ++i) {
      const auto& st = m.requesters()[i];
      RequesterSummary q;
      q.index = i;
      q.port = requesters_[i]->port().value;
      q.completed = st.completed;
      q.cache_hits = st.cache_hits;
      q.bandwidth = st.bandwidth();
      q.normalized_bandwidth = q.bandwidth / s.norm_base;
      q.mean_latency = st.mean_latency();
      s.requesters.push_back(q);
    }
    return s;
  }

  SystemConfig cfg_;
  std::uint64_t seed_;
  Engine engine_;
  PacketPool pool_;
  TopologyGraph graph_;
  RoutingTable table_;
  Network net_;
  Collector metrics_;
  std::vector<std::unique_ptr<Requester>> requesters_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

inline RunSummary simulate(const SystemConfig& cfg, std::optional<std::uint64_t> seed = std::nullopt,
                           const std::string& label = "") {
  Simulation sim(cfg, seed);
  return sim.run(label);
}

}  // namespace cxlsim
