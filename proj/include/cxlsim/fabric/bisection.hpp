#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <queue>
#include <vector>

#include "cxlsim/fabric/graph.hpp"

namespace cxlsim {

namespace detail {

// Edmonds-Karp over a small undirected capacity graph.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : adj_(n) {}

  void add_undirected(std::size_t u, std::size_t v, double cap) {
    adj_[u].push_back(arcs_.size());
    arcs_.push_back({v, cap});
    adj_[v].push_back(arcs_.size());
    arcs_.push_back({u, cap});
  }

  double run(std::size_t s, std::size_t t) {
    double total = 0.0;
    std::vector<std::size_t> via(adj_.size());
    for (;;) {
      std::fill(via.begin(), via.end(), kNone);
      std::queue<std::size_t> q;
      q.push(s);
      via[s] = kSource;
      while (!q.empty() && via[t] == kNone) {
        const auto u = q.front();
        q.pop();
        for (auto a : adj_[u]) {
          if (arcs_[a].cap > kEps && via[arcs_[a].to] == kNone) {
            via[arcs_[a].to] = a;
            q.push(arcs_[a].to);
          }
        }
      }
      if (via[t] == kNone) return total;
      double push = std::numeric_limits<double>::infinity();
      for (auto v = t; v != s; v = arcs_[via[v] ^ 1].to) push = std::min(push, arcs_[via[v]].cap);
      for (auto v = t; v != s; v = arcs_[via[v] ^ 1].to) {
        arcs_[via[v]].cap -= push;
        arcs_[via[v] ^ 1].cap += push;
      }
      total += push;
    }
  }

 private:
  struct Arc {
    std::size_t to;
    double cap;
  };
  static constexpr std::size_t kNone = ~std::size_t{0};
  static constexpr std::size_t kSource = kNone - 1;
  static constexpr double kEps = 1e-12;

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Arc> arcs_;
};

}  // namespace detail

// Minimum link bandwidth that must be removed to separate terminal set
// `side_a` from every other terminal; switches may fall on either side.
inline double cut_capacity(const TopologyGraph& g, const std::vector<bool>& side_a) {
  const auto n = g.num_nodes();
  detail::MaxFlow flow(n + 2);
  const auto source = n, sink = n + 1;
  const double unbounded = 1e18;
  for (const auto& l : g.links()) flow.add_undirected(l.a.value, l.b.value, l.bandwidth);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (g.is_switch(NodeId(i))) continue;
    if (side_a[i]) {
      flow.add_undirected(source, i, unbounded);
    } else {
      flow.add_undirected(i, sink, unbounded);
    }
  }
  return flow.run(source, sink);
}

// Exhaustive search over balanced terminal partitions.
inline double bisection_bandwidth_exhaustive(const TopologyGraph& g) {
  std::vector<NodeId> terminals;
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    if (!g.is_switch(NodeId(i))) terminals.emplace_back(i);
  }
  const auto t = terminals.size();
  if (t % 2 != 0) {
    throw ConfigError("bisection needs an even number of terminals, have " + std::to_string(t));
  }
  // terminals[0] stays on side A; each mirrored partition is visited once.
  std::vector<bool> pick(t - 1, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(t / 2 - 1), true);
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> side_a(g.num_nodes(), false);
  do {
    std::fill(side_a.begin(), side_a.end(), false);
    side_a[terminals[0].value] = true;
    for (std::size_t i = 0; i + 1 < t; ++i) {
      if (pick[i]) side_a[terminals[i + 1].value] = true;
    }
    best = std::min(best, cut_capacity(g, side_a));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// Closed forms for generated presets with a uniform link bandwidth.
inline double bisection_bandwidth_closed_form(const PresetInfo& p, double bw) {
  const double n = p.requesters;
  switch (p.kind) {
    case TopologyKind::chain:
      return (p.requesters % 2 == 0 || p.requesters == 1 ? 1.0 : 2.0) * bw;
    case TopologyKind::ring:
      return (p.requesters % 2 == 0 ? 2.0 : 3.0) * bw;
    case TopologyKind::tree:
      return bw;
    case TopologyKind::spine_leaf:
      return std::min(n, std::ceil(n / 2.0) * p.spines) * bw;
    case TopologyKind::fully_connected:
      // An odd pair count forces one requester/endpoint pair to be split.
      return std::min(n, std::floor(n / 2.0) * std::ceil(n / 2.0) + (p.requesters % 2)) * bw;
  }
  return 0.0;
}

// Minimum aggregate link bandwidth across any balanced partition of the
// terminals. Exhaustive up to 16 terminals, closed form for larger presets.
inline double bisection_bandwidth(const TopologyGraph& g) {
  std::size_t terminals = g.num_ports();
  if (terminals % 2 != 0) {
    throw ConfigError("bisection needs an even number of terminals, have " +
                      std::to_string(terminals));
  }
  if (terminals <= 16) return bisection_bandwidth_exhaustive(g);
  const auto& preset = g.preset();
  if (!preset || preset->requesters != preset->endpoints) {
    throw ConfigError("bisection of more than 16 terminals needs a symmetric preset topology");
  }
  double bw = std::numeric_limits<double>::infinity();
  for (const auto& l : g.links()) bw = std::min(bw, l.bandwidth);
  return bisection_bandwidth_closed_form(*preset, bw);
}

}  // namespace cxlsim
