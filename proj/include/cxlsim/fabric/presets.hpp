#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxlsim/fabric/graph.hpp"

namespace cxlsim {

struct TopologyParams {
  std::uint32_t spines = 2;        // spine_leaf only
  std::uint32_t fanout = 2;        // tree only: children per switch below the root
  std::uint32_t switch_ports = 64;
  LinkSpec link;                   // template for every generated link (a/b ignored)
};

namespace detail {

struct TopologyBuilder {
  TopologySpec spec;
  LinkSpec tmpl;

  NodeId add(NodeRole r) {
    spec.roles.push_back(r);
    return NodeId(static_cast<std::uint32_t>(spec.roles.size() - 1));
  }
  void connect(NodeId a, NodeId b) {
    LinkSpec l = tmpl;
    l.a = a;
    l.b = b;
    spec.links.push_back(l);
  }
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace detail

// Generates the link list for one of the five preset shapes. Node ids are
// assigned requesters first, then endpoints, then switches, so requester i
// owns edge port i and endpoint j owns edge port n_requesters + j.
//
//  chain           switches in a line, two terminals per switch; requesters
//                  fill the switches from one end and endpoints from the other,
//                  so every request crosses the middle of the line
//  ring            the chain closed by one extra switch-to-switch link
//  tree            a root whose two subtrees (complete `fanout`-ary heaps)
//                  host the requesters and the endpoints, two per switch
//  spine_leaf      leaves with two requesters or two endpoints each; every
//                  leaf links to every spine
//  fully_connected one switch per requester/endpoint pair, all switch pairs
//                  linked
inline TopologySpec make_topology(TopologyKind kind, std::uint32_t n_requesters,
                                  std::uint32_t n_endpoints, const TopologyParams& params = {}) {
  using detail::require;
  require(n_requesters >= 1 && n_endpoints >= 1,
          std::string(to_string(kind)) + " needs at least one requester and one endpoint");

  detail::TopologyBuilder b;
  b.tmpl = params.link;
  b.spec.switch_ports = params.switch_ports;
  b.spec.preset = PresetInfo{kind, n_requesters, n_endpoints, params.spines, params.fanout};

  std::vector<NodeId> terminals;
  for (std::uint32_t i = 0; i < n_requesters; ++i) terminals.push_back(b.add(NodeRole::requester));
  for (std::uint32_t i = 0; i < n_endpoints; ++i) terminals.push_back(b.add(NodeRole::endpoint));
  const std::vector<NodeId> reqs(terminals.begin(), terminals.begin() + n_requesters);
  const std::vector<NodeId> eps(terminals.begin() + n_requesters, terminals.end());

  // Attaches `group` two-per-switch to `switches` in order.
  auto host_pairs = [&](const std::vector<NodeId>& group, const std::vector<NodeId>& switches) {
    for (std::size_t i = 0; i < group.size(); ++i) b.connect(group[i], switches[i / 2]);
  };
  auto make_switches = [&](std::size_t count) {
    std::vector<NodeId> s;
    for (std::size_t i = 0; i < count; ++i) s.push_back(b.add(NodeRole::switch_node));
    return s;
  };

  switch (kind) {
    case TopologyKind::chain:
    case TopologyKind::ring: {
      const auto count = (terminals.size() + 1) / 2;
      if (kind == TopologyKind::ring) {
        require(count >= 3, "ring needs at least three switches (n_requesters + n_endpoints >= 5)");
      }
      const auto sw = make_switches(count);
      host_pairs(terminals, sw);
      for (std::size_t i = 0; i + 1 < sw.size(); ++i) b.connect(sw[i], sw[i + 1]);
      if (kind == TopologyKind::ring) b.connect(sw.back(), sw.front());
      break;
    }
    case TopologyKind::tree: {
      require(params.fanout >= 2, "tree fanout must be at least 2");
      const NodeId root = b.add(NodeRole::switch_node);
      auto subtree = [&](const std::vector<NodeId>& group) {
        const auto sw = make_switches((group.size() + 1) / 2);
        b.connect(root, sw.front());
        for (std::size_t j = 1; j < sw.size(); ++j) b.connect(sw[(j - 1) / params.fanout], sw[j]);
        host_pairs(group, sw);
      };
      subtree(reqs);
      subtree(eps);
      break;
    }
    case TopologyKind::spine_leaf: {
      require(params.spines >= 1, "spine_leaf needs at least one spine");
      const auto req_leaves = make_switches((reqs.size() + 1) / 2);
      const auto ep_leaves = make_switches((eps.size() + 1) / 2);
      const auto spines = make_switches(params.spines);
      host_pairs(reqs, req_leaves);
      host_pairs(eps, ep_leaves);
      for (const auto* leaves : {&req_leaves, &ep_leaves}) {
        for (NodeId leaf : *leaves) {
          for (NodeId s : spines) b.connect(leaf, s);
        }
      }
      break;
    }
    case TopologyKind::fully_connected: {
      require(n_requesters == n_endpoints,
              "fully_connected pairs each requester with one endpoint; counts must match");
      const auto sw = make_switches(n_requesters);
      for (std::uint32_t i = 0; i < n_requesters; ++i) {
        b.connect(reqs[i], sw[i]);
        b.connect(eps[i], sw[i]);
      }
      for (std::size_t i = 0; i < sw.size(); ++i) {
        for (std::size_t j = i + 1; j < sw.size(); ++j) b.connect(sw[i], sw[j]);
      }
      break;
    }
  }

  std::vector<std::uint32_t> degree(b.spec.roles.size(), 0);
  for (const auto& l : b.spec.links) {
    ++degree[l.a.value];
    ++degree[l.b.value];
  }
  for (std::size_t i = 0; i < degree.size(); ++i) {
    require(degree[i] <= params.switch_ports,
            std::string(to_string(kind)) + " with these parameters needs " +
                std::to_string(degree[i]) + " ports on node " + std::to_string(i) + " but switches have " +
                std::to_string(params.switch_ports));
  }
  return b.spec;
}

inline TopologyKind parse_topology_kind(const std::string& s) {
  if (s == "chain") return TopologyKind::chain;
  if (s == "tree") return TopologyKind::tree;
  if (s == "ring") return TopologyKind::ring;
  if (s == "spine_leaf" || s == "spine-leaf") return TopologyKind::spine_leaf;
  if (s == "fully_connected" || s == "fully-connected") return TopologyKind::fully_connected;
  throw ConfigError("unknown topology kind '" + s +
                    "' (expected chain, tree, ring, spine_leaf, fully_connected)");
}

}  // namespace cxlsim
