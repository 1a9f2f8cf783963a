#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include "cxlsim/fabric/graph.hpp"

namespace cxlsim {

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

// Hop distance (links) from every node to `dst`. Only switches forward
// traffic, so terminals other than `dst` are never expanded.
inline std::vector<std::uint32_t> distances_to(const TopologyGraph& g, NodeId dst) {
  std::vector<std::uint32_t> dist(g.num_nodes(), kUnreachable);
  std::queue<NodeId> frontier;
  dist[dst.value] = 0;
  frontier.push(dst);
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    if (u != dst && !g.is_switch(u)) continue;
    for (const auto& a : g.neighbors(u)) {
      if (dist[a.peer.value] == kUnreachable) {
        dist[a.peer.value] = dist[u.value] + 1;
        frontier.push(a.peer);
      }
    }
  }
  return dist;
}

struct NextHop {
  std::size_t link;
  NodeId next;
};

// Per-node forwarding state: for each destination port, every egress that
// lies on some minimum-hop route, ordered by next-hop NodeId. The first
// candidate is the static (oblivious) choice.
class RoutingTable {
 public:
  static RoutingTable build(const TopologyGraph& g) {
    RoutingTable t;
    t.num_ports_ = g.num_ports();
    t.candidates_.assign(g.num_nodes() * t.num_ports_, {});
    t.distance_.assign(g.num_nodes() * t.num_ports_, kUnreachable);
    for (std::uint32_t p = 0; p < t.num_ports_; ++p) {
      const NodeId dst = g.node_of(PortId(p));
      const auto dist = distances_to(g, dst);
      for (std::uint32_t u = 0; u < g.num_nodes(); ++u) {
        t.distance_[u * t.num_ports_ + p] = dist[u];
        if (NodeId(u) == dst || dist[u] == kUnreachable) continue;
        auto& out = t.candidates_[u * t.num_ports_ + p];
        for (const auto& a : g.neighbors(NodeId(u))) {
          const bool may_transit = a.peer == dst || g.is_switch(a.peer);
          if (may_transit && dist[a.peer.value] + 1 == dist[u]) {
            out.push_back({a.link, a.peer});
          }
        }
      }
    }
    return t;
  }

  const std::vector<NextHop>& candidates(NodeId at, PortId dst) const {
    return candidates_.at(at.value * num_ports_ + dst.value);
  }

  std::uint32_t distance(NodeId from, PortId dst) const {
    return distance_.at(from.value * num_ports_ + dst.value);
  }

 private:
  std::size_t num_ports_ = 0;
  std::vector<std::vector<NextHop>> candidates_;
  std::vector<std::uint32_t> distance_;
};

struct Route {
  std::vector<NodeId> nodes;       // source terminal ... destination terminal
  std::vector<std::size_t> links;  // links[i] joins nodes[i] and nodes[i+1]

  std::size_t hop_count() const noexcept { return links.size(); }
  bool operator==(const Route&) const = default;
};

using RouteMap = std::map<std::pair<PortId, PortId>, std::vector<Route>>;

// All minimum-hop routes for every ordered pair of edge ports, each list in
// lexicographic order of node IDs.
inline RouteMap shortest_routes(const TopologyGraph& g, const RoutingTable& table) {
  RouteMap out;
  const auto ports = static_cast<std::uint32_t>(g.num_ports());
  for (std::uint32_t s = 0; s < ports; ++s) {
    for (std::uint32_t d = 0; d < ports; ++d) {
      if (s == d) continue;
      const PortId src(s), dst(d);
      std::vector<Route> routes;
      Route partial;
      partial.nodes.push_back(g.node_of(src));
      // Depth-first expansion over the candidate DAG; candidates are sorted
      // by next-hop id, so routes come out in lexicographic order.
      auto expand = [&](auto& self) -> void {
        const NodeId at = partial.nodes.back();
        if (at == g.node_of(dst)) {
          routes.push_back(partial);
          return;
        }
        for (const auto& hop : table.candidates(at, dst)) {
          partial.nodes.push_back(hop.next);
          partial.links.push_back(hop.link);
          self(self);
          partial.nodes.pop_back();
          partial.links.pop_back();
        }
      };
      expand(expand);
      out.emplace(std::make_pair(src, dst), std::move(routes));
    }
  }
  return out;
}

inline RouteMap shortest_routes(const TopologyGraph& g) {
  return shortest_routes(g, RoutingTable::build(g));
}

// The route oblivious forwarding takes: first candidate at every hop.
inline Route default_route(const TopologyGraph& g, const RoutingTable& table, PortId src,
                           PortId dst) {
  Route r;
  r.nodes.push_back(g.node_of(src));
  while (r.nodes.back() != g.node_of(dst)) {
    const auto& c = table.candidates(r.nodes.back(), dst);
    if (c.empty()) throw ConfigError("no route from " + to_string(src) + " to " + to_string(dst));
    r.links.push_back(c.front().link);
    r.nodes.push_back(c.front().next);
  }
  return r;
}

}  // namespace cxlsim
