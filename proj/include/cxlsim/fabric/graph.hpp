#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cxlsim/fabric/ids.hpp"
#include "cxlsim/sim/error.hpp"
#include "cxlsim/sim/time.hpp"

namespace cxlsim {

enum class NodeRole : std::uint8_t { requester, switch_node, endpoint };
enum class Duplex : std::uint8_t { full, half };
enum class TopologyKind : std::uint8_t { chain, tree, ring, spine_leaf, fully_connected };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::requester: return "requester";
    case NodeRole::switch_node: return "switch";
    case NodeRole::endpoint: return "endpoint";
  }
  return "?";
}

inline const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::chain: return "chain";
    case TopologyKind::tree: return "tree";
    case TopologyKind::ring: return "ring";
    case TopologyKind::spine_leaf: return "spine_leaf";
    case TopologyKind::fully_connected: return "fully_connected";
  }
  return "?";
}

// A physical link between two devices. Buses are link attributes rather
// than graph nodes, so hop counts equal the number of links traversed.
struct LinkSpec {
  NodeId a;
  NodeId b;
  double bandwidth = 16.0;   // bytes per ns, per direction when full duplex
  SimTime propagation = 1;   // wire time added after serialization
  Duplex duplex = Duplex::full;
  SimTime turnaround = 0;    // half duplex: penalty when direction flips

  bool operator==(const LinkSpec&) const = default;
};

// Which generator produced a topology; enables closed-form bisection for
// systems too large for exhaustive partition search.
struct PresetInfo {
  TopologyKind kind = TopologyKind::chain;
  std::uint32_t requesters = 0;
  std::uint32_t endpoints = 0;
  std::uint32_t spines = 0;
  std::uint32_t fanout = 0;
};

struct TopologySpec {
  std::vector<NodeRole> roles;   // indexed by NodeId
  std::vector<LinkSpec> links;
  std::uint32_t switch_ports = 64;
  std::optional<PresetInfo> preset;
};

// Validated, immutable device graph.
class TopologyGraph {
 public:
  struct Adjacent {
    std::size_t link;
    NodeId peer;
  };

  static TopologyGraph build(TopologySpec spec) {
    TopologyGraph g;
    g.spec_ = std::move(spec);
    g.validate_and_index();
    return g;
  }

  std::size_t num_nodes() const noexcept { return spec_.roles.size(); }
  std::size_t num_links() const noexcept { return spec_.links.size(); }
  NodeRole role(NodeId n) const { return spec_.roles.at(n.value); }
  bool is_switch(NodeId n) const { return role(n) == NodeRole::switch_node; }
  const LinkSpec& link(std::size_t i) const { return spec_.links.at(i); }
  const std::vector<LinkSpec>& links() const noexcept { return spec_.links; }
  const std::vector<Adjacent>& neighbors(NodeId n) const { return adj_.at(n.value); }
  const TopologySpec& spec() const noexcept { return spec_; }
  const std::optional<PresetInfo>& preset() const noexcept { return spec_.preset; }

  std::size_t num_ports() const noexcept { return port_node_.size(); }
  PortId port_of(NodeId n) const {
    const auto p = node_port_.at(n.value);
    if (!p) throw ConfigError(to_string(n) + " is a switch and has no edge port");
    return *p;
  }
  NodeId node_of(PortId p) const { return port_node_.at(p.value); }

  std::vector<NodeId> nodes_with_role(NodeRole r) const {
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < num_nodes(); ++i) {
      if (spec_.roles[i] == r) out.emplace_back(i);
    }
    return out;
  }

  // The link a terminal (requester/endpoint) attaches through.
  std::size_t attachment_link(NodeId terminal) const {
    return neighbors(terminal).front().link;
  }

  NodeId other_end(std::size_t link_index, NodeId from) const {
    const auto& l = link(link_index);
    return l.a == from ? l.b : l.a;
  }

  // Direction index on a link: 0 for a->b, 1 for b->a.
  int direction(std::size_t link_index, NodeId from) const {
    return link(link_index).a == from ? 0 : 1;
  }

 private:
  void validate_and_index() {
    const auto n = spec_.roles.size();
    if (spec_.links.empty()) throw ConfigError("topology has no links");
    adj_.assign(n, {});
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (std::size_t i = 0; i < spec_.links.size(); ++i) {
      const auto& l = spec_.links[i];
      if (l.a.value >= n || l.b.value >= n) {
        throw ConfigError("link " + std::to_string(i) + " references unknown " +
                          to_string(l.a.value >= n ? l.a : l.b));
      }
      if (l.a == l.b) throw ConfigError("self-link on " + to_string(l.a));
      if (!(l.bandwidth > 0.0)) {
        throw ConfigError("link " + to_string(l.a) + " - " + to_string(l.b) +
                          " must have positive bandwidth");
      }
      auto key = std::minmax(l.a.value, l.b.value);
      if (!seen.insert(key).second) {
        throw ConfigError("duplicate link between " + to_string(l.a) + " and " +
                          to_string(l.b));
      }
      adj_[l.a.value].push_back({i, l.b});
      adj_[l.b.value].push_back({i, l.a});
    }
    for (auto& list : adj_) {
      std::sort(list.begin(), list.end(),
                [](const Adjacent& x, const Adjacent& y) { return x.peer < y.peer; });
    }

    for (std::uint32_t i = 0; i < n; ++i) {
      const NodeId id(i);
      const auto degree = adj_[i].size();
      if (degree == 0) throw ConfigError("disconnected graph: " + to_string(id) + " has no links");
      if (spec_.roles[i] == NodeRole::switch_node) {
        if (degree > spec_.switch_ports) {
          throw ConfigError("port-count overflow on " + to_string(id) + ": " +
                            std::to_string(degree) + " links, " +
                            std::to_string(spec_.switch_ports) + " ports");
        }
      } else if (degree != 1) {
        throw ConfigError(std::string(to_string(spec_.roles[i])) + " " + to_string(id) +
                          " must attach through exactly one link, has " +
                          std::to_string(degree));
      }
    }

    std::vector<bool> reached(n, false);
    std::queue<std::uint32_t> frontier;
    frontier.push(0);
    reached[0] = true;
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (const auto& a : adj_[u]) {
        if (!reached[a.peer.value]) {
          reached[a.peer.value] = true;
          frontier.push(a.peer.value);
        }
      }
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!reached[i]) {
        throw ConfigError("disconnected graph: no path from node 0 to " + to_string(NodeId(i)));
      }
    }

    node_port_.assign(n, std::nullopt);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (spec_.roles[i] == NodeRole::switch_node) continue;
      if (port_node_.size() > PortId::kMax) {
        throw ConfigError("more than 4096 edge ports in one fabric");
      }
      node_port_[i] = PortId(static_cast<std::uint32_t>(port_node_.size()));
      port_node_.emplace_back(i);
    }
    if (port_node_.size() < 2) throw ConfigError("fabric needs at least two edge ports");
  }

  TopologySpec spec_;
  std::vector<std::vector<Adjacent>> adj_;
  std::vector<std::optional<PortId>> node_port_;
  std::vector<NodeId> port_node_;
};

inline TopologyGraph build_graph(TopologySpec spec) {
  return TopologyGraph::build(std::move(spec));
}

}  // namespace cxlsim
