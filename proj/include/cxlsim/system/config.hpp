#pragma once

#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "cxlsim/coherence/victim_policy.hpp"
#include "cxlsim/devices/network.hpp"
#include "cxlsim/devices/packet.hpp"
#include "cxlsim/fabric/graph.hpp"
#include "cxlsim/fabric/presets.hpp"
#include "cxlsim/sim/error.hpp"
#include "cxlsim/workload/pattern.hpp"

namespace cxlsim {

struct LatencyConfig {
  SimTime requester = 10;
  SimTime cache = 12;
  SimTime controller = 40;
  SimTime port = 25;
  SimTime bus = 1;
  SimTime switching = 20;
  SimTime access = 0;  // media latency behind the controller
  bool operator==(const LatencyConfig&) const = default;
};

struct LinkDefaults {
  double bandwidth = 16.0;
  Duplex duplex = Duplex::full;
  SimTime turnaround = 0;
  bool operator==(const LinkDefaults&) const = default;
};

struct TopologyConfig {
  bool use_preset = true;
  TopologyKind kind = TopologyKind::chain;
  std::uint32_t requesters = 1;
  std::uint32_t endpoints = 1;
  std::uint32_t spines = 2;
  std::uint32_t fanout = 2;
  std::uint32_t switch_ports = 64;
  std::vector<NodeRole> nodes;  // explicit topologies
  std::vector<LinkSpec> links;
  double bisection_target = 0.0;  // > 0: scale every link so bisection equals this
  bool operator==(const TopologyConfig&) const = default;
};

struct RequesterDefaults {
  std::uint64_t queue_capacity = 64;
  SimTime issue_interval = 0;
  std::uint64_t cache_lines = 0;
  std::uint64_t interleave_granularity = 64;
  bool operator==(const RequesterDefaults&) const = default;
};

struct RequesterOverride {
  std::uint32_t index = 0;
  std::optional<std::uint64_t> queue_capacity;
  std::optional<SimTime> issue_interval;
  std::optional<std::uint64_t> cache_lines;
  std::optional<std::uint64_t> total_requests;
  std::optional<std::uint64_t> warmup_requests;
  std::optional<double> read_ratio;
  bool operator==(const RequesterOverride&) const = default;
};

struct CoherenceConfig {
  bool enabled = false;
  std::uint64_t sf_capacity = 0;
  VictimPolicy policy;
  bool shared_reads = false;
  bool operator==(const CoherenceConfig&) const = default;
};

struct EndpointConfig {
  std::uint64_t capacity_bytes = 0;
  bool operator==(const EndpointConfig&) const = default;
};

struct SystemConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  std::uint32_t repeat = 1;
  std::string output_dir = "out";
  TopologyConfig topology;
  LinkDefaults link;
  LatencyConfig latency;
  RoutingMode routing = RoutingMode::oblivious;
  HeaderModel header;
  RequesterDefaults requester;
  std::vector<RequesterOverride> overrides;
  PatternSpec workload;
  CoherenceConfig coherence;
  EndpointConfig endpoint;
  double normalize_bandwidth = 0.0;  // 0: default link bandwidth
  bool check_invariants = false;
  bool operator==(const SystemConfig&) const = default;

  std::uint32_t num_requesters() const {
    if (topology.use_preset) return topology.requesters;
    std::uint32_t n = 0;
    for (auto r : topology.nodes) n += r == NodeRole::requester;
    return n;
  }
};

namespace detail {

using nlohmann::json;

// Walks one JSON object, reporting errors with the dotted key path and
// rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(key(it.key()), "unknown key");
    }
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }
  const json& at(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  template <typename T>
  void read(const std::string& k, T& out) {
    if (!has(k)) return;
    out = convert<T>(at(k), key(k));
  }

  template <typename T>
  void read(const std::string& k, std::optional<T>& out) {
    if (!has(k)) return;
    out = convert<T>(at(k), key(k));
  }

  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(where, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail(where, "expected a non-negative integer");
      }
      const auto x = v.get<std::uint64_t>();
      if (x > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) fail(where, "value too large");
      return static_cast<T>(x);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(where, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_string()) fail(where, "expected a string");
      return v.get<std::string>();
    }
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Fn>
auto with_path(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline Duplex parse_duplex(const std::string& s, const std::string& where) {
  if (s == "full") return Duplex::full;
  if (s == "half") return Duplex::half;
  ObjectReader::fail(where, "expected \"full\" or \"half\", got \"" + s + "\"");
}

inline NodeRole parse_role(const std::string& s, const std::string& where) {
  if (s == "requester") return NodeRole::requester;
  if (s == "switch") return NodeRole::switch_node;
  if (s == "endpoint") return NodeRole::endpoint;
  ObjectReader::fail(where, "expected requester, switch or endpoint, got \"" + s + "\"");
}

inline void check_ratio(double v, const std::string& where) {
  if (!(v >= 0.0 && v <= 1.0)) ObjectReader::fail(where, "must be in [0, 1]");
}

}  // namespace detail

// Parses and validates a configuration document. Relative trace paths are
// resolved against `base_dir`.
inline SystemConfig parse_config(const nlohmann::json& j, const std::string& base_dir = "") {
  using detail::ObjectReader;
  SystemConfig c;
  ObjectReader root(j, "");
  root.read("name", c.name);
  root.read("seed", c.seed);
  root.read("repeat", c.repeat);
  if (c.repeat == 0) ObjectReader::fail("repeat", "must be at least 1");
  root.read("output_dir", c.output_dir);
  root.read("normalize_bandwidth", c.normalize_bandwidth);
  if (c.normalize_bandwidth < 0) ObjectReader::fail("normalize_bandwidth", "must be non-negative");
  root.read("check_invariants", c.check_invariants);

  if (root.has("link_defaults")) {
    ObjectReader r(root.at("link_defaults"), "link_defaults");
    r.read("bandwidth", c.link.bandwidth);
    if (!(c.link.bandwidth > 0)) ObjectReader::fail("link_defaults.bandwidth", "must be positive");
    std::string d = c.link.duplex == Duplex::full ? "full" : "half";
    r.read("duplex", d);
    c.link.duplex = detail::parse_duplex(d, "link_defaults.duplex");
    r.read("turnaround", c.link.turnaround);
  }

  if (root.has("latency")) {
    ObjectReader r(root.at("latency"), "latency");
    r.read("requester", c.latency.requester);
    r.read("cache", c.latency.cache);
    r.read("controller", c.latency.controller);
    r.read("port", c.latency.port);
    r.read("bus", c.latency.bus);
    r.read("switching", c.latency.switching);
    r.read("access", c.latency.access);
  }

  if (!root.has("topology")) ObjectReader::fail("topology", "missing");
  {
    ObjectReader r(root.at("topology"), "topology");
    auto& t = c.topology;
    const bool preset = r.has("preset");
    const bool explicit_links = r.has("links");
    if (preset == explicit_links) ObjectReader::fail("topology", "give exactly one of \"preset\" or \"links\"");
    r.read("switch_ports", t.switch_ports);
    r.read("bisection_target", t.bisection_target);
    if (t.bisection_target < 0) ObjectReader::fail("topology.bisection_target", "must be non-negative");
    if (preset) {
      t.use_preset = true;
      std::string kind;
      r.read("preset", kind);
      t.kind = detail::with_path("topology.preset", [&] { return parse_topology_kind(kind); });
      r.read("requesters", t.requesters);
      r.read("endpoints", t.endpoints);
      r.read("spines", t.spines);
      r.read("fanout", t.fanout);
    } else {
      t.use_preset = false;
      if (!r.has("nodes")) ObjectReader::fail("topology.nodes", "missing (list of roles, indexed by node id)");
      const auto& nodes = r.at("nodes");
      if (!nodes.is_array()) ObjectReader::fail("topology.nodes", "expected an array");
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto where = "topology.nodes[" + std::to_string(i) + "]";
        t.nodes.push_back(detail::parse_role(ObjectReader::convert<std::string>(nodes[i], where), where));
      }
      const auto& links = r.at("links");
      if (!links.is_array()) ObjectReader::fail("topology.links", "expected an array");
      for (std::size_t i = 0; i < links.size(); ++i) {
        const auto where = "topology.links[" + std::to_string(i) + "]";
        ObjectReader lr(links[i], where);
        LinkSpec l;
        l.bandwidth = c.link.bandwidth;
        l.duplex = c.link.duplex;
        l.turnaround = c.link.turnaround;
        l.propagation = c.latency.bus;
        if (!lr.has("a") || !lr.has("b")) ObjectReader::fail(where, "needs \"a\" and \"b\"");
        l.a = NodeId(ObjectReader::convert<std::uint32_t>(lr.at("a"), where + ".a"));
        l.b = NodeId(ObjectReader::convert<std::uint32_t>(lr.at("b"), where + ".b"));
        lr.read("bandwidth", l.bandwidth);
        lr.read("propagation", l.propagation);
        lr.read("turnaround", l.turnaround);
        std::string d = l.duplex == Duplex::full ? "full" : "half";
        lr.read("duplex", d);
        l.duplex = detail::parse_duplex(d, where + ".duplex");
        t.links.push_back(l);
      }
    }
  }

  if (root.has("routing")) {
    std::string m;
    root.read("routing", m);
    c.routing = detail::with_path("routing", [&] { return parse_routing_mode(m); });
  }

  if (root.has("header")) {
    ObjectReader r(root.at("header"), "header");
    r.read("overhead", c.header.overhead);
    if (!(c.header.overhead >= 0.0 && c.header.overhead <= 16.0)) {
      ObjectReader::fail("header.overhead", "must be in [0, 16]");
    }
    r.read("on_data", c.header.header_on_data);
  }

  if (root.has("requesters")) {
    ObjectReader r(root.at("requesters"), "requesters");
    r.read("queue_capacity", c.requester.queue_capacity);
    if (c.requester.queue_capacity == 0) ObjectReader::fail("requesters.queue_capacity", "must be at least 1");
    r.read("issue_interval", c.requester.issue_interval);
    r.read("cache_lines", c.requester.cache_lines);
    r.read("interleave_granularity", c.requester.interleave_granularity);
    const auto g = c.requester.interleave_granularity;
    if (g == 0 || (g & (g - 1)) != 0) ObjectReader::fail("requesters.interleave_granularity", "must be a power of two");
    if (r.has("overrides")) {
      const auto& list = r.at("overrides");
      if (!list.is_array()) ObjectReader::fail("requesters.overrides", "expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto where = "requesters.overrides[" + std::to_string(i) + "]";
        ObjectReader o(list[i], where);
        RequesterOverride ov;
        if (!o.has("index")) ObjectReader::fail(where + ".index", "missing");
        o.read("index", ov.index);
        o.read("queue_capacity", ov.queue_capacity);
        if (ov.queue_capacity && *ov.queue_capacity == 0) ObjectReader::fail(where + ".queue_capacity", "must be at least 1");
        o.read("issue_interval", ov.issue_interval);
        o.read("cache_lines", ov.cache_lines);
        o.read("total_requests", ov.total_requests);
        o.read("warmup_requests", ov.warmup_requests);
        o.read("read_ratio", ov.read_ratio);
        if (ov.read_ratio) detail::check_ratio(*ov.read_ratio, where + ".read_ratio");
        c.overrides.push_back(ov);
      }
    }
  }

  if (root.has("workload")) {
    ObjectReader r(root.at("workload"), "workload");
    auto& w = c.workload;
    std::string kind = to_string(w.kind);
    r.read("pattern", kind);
    w.kind = detail::with_path("workload.pattern", [&] { return parse_pattern_kind(kind); });
    r.read("footprint_bytes", w.footprint_bytes);
    r.read("hot_fraction", w.hot_fraction);
    r.read("hot_prob", w.hot_prob);
    r.read("read_ratio", w.read_ratio);
    r.read("total_requests", w.total_requests);
    r.read("warmup_requests", w.warmup_requests);
    r.read("partition", w.partition);
    r.read("trace", w.trace_path);
    detail::check_ratio(w.hot_fraction, "workload.hot_fraction");
    detail::check_ratio(w.hot_prob, "workload.hot_prob");
    detail::check_ratio(w.read_ratio, "workload.read_ratio");
    if (w.kind == PatternKind::trace) {
      if (w.trace_path.empty()) ObjectReader::fail("workload.trace", "required for the trace pattern");
      if (!base_dir.empty() && w.trace_path.front() != '/') w.trace_path = base_dir + "/" + w.trace_path;
    } else if (w.footprint_bytes < kLineBytes) {
      ObjectReader::fail("workload.footprint_bytes", "must cover at least one 64 B line");
    }
  }

  if (root.has("coherence")) {
    ObjectReader r(root.at("coherence"), "coherence");
    auto& k = c.coherence;
    r.read("enabled", k.enabled);
    r.read("sf_capacity", k.sf_capacity);
    std::string policy = to_string(k.policy.kind);
    r.read("victim_policy", policy);
    k.policy.kind = detail::with_path("coherence.victim_policy", [&] { return parse_victim_kind(policy); });
    r.read("invblk_max_len", k.policy.max_len);
    if (k.policy.max_len < 1 || k.policy.max_len > VictimPolicy::kMaxBlock) {
      ObjectReader::fail("coherence.invblk_max_len", "must be in [1, 4]");
    }
    r.read("shared_reads", k.shared_reads);
    if (k.enabled && k.sf_capacity == 0) ObjectReader::fail("coherence.sf_capacity", "must be at least 1");
  }

  if (root.has("endpoint")) {
    ObjectReader r(root.at("endpoint"), "endpoint");
    r.read("capacity_bytes", c.endpoint.capacity_bytes);
  }

  const auto n_req = c.num_requesters();
  for (std::size_t i = 0; i < c.overrides.size(); ++i) {
    if (c.overrides[i].index >= n_req) {
      ObjectReader::fail("requesters.overrides[" + std::to_string(i) + "].index",
                         "no requester " + std::to_string(c.overrides[i].index) + " (have " +
                             std::to_string(n_req) + ")");
    }
  }
  if (c.coherence.enabled && c.requester.cache_lines == 0) {
    bool any = false;
    for (const auto& o : c.overrides) any = any || (o.cache_lines && *o.cache_lines > 0);
    if (!any) ObjectReader::fail("coherence.enabled", "requires requesters with cache_lines > 0");
  }
  return c;
}

inline SystemConfig parse_config_text(const std::string& text, const std::string& base_dir = "") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, base_dir);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto slash = path.find_last_of('/');
  return parse_config_text(ss.str(), slash == std::string::npos ? "" : path.substr(0, slash));
}

// Full, explicit form of a configuration; parse_config(to_json(c)) == c.
inline nlohmann::json to_json(const SystemConfig& c) {
  using nlohmann::json;
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["repeat"] = c.repeat;
  j["output_dir"] = c.output_dir;
  j["normalize_bandwidth"] = c.normalize_bandwidth;
  j["check_invariants"] = c.check_invariants;
  j["link_defaults"] = {{"bandwidth", c.link.bandwidth},
                        {"duplex", c.link.duplex == Duplex::full ? "full" : "half"},
                        {"turnaround", c.link.turnaround}};
  j["latency"] = {{"requester", c.latency.requester}, {"cache", c.latency.cache},
                  {"controller", c.latency.controller}, {"port", c.latency.port},
                  {"bus", c.latency.bus}, {"switching", c.latency.switching},
                  {"access", c.latency.access}};
  json t;
  t["switch_ports"] = c.topology.switch_ports;
  t["bisection_target"] = c.topology.bisection_target;
  if (c.topology.use_preset) {
    t["preset"] = to_string(c.topology.kind);
    t["requesters"] = c.topology.requesters;
    t["endpoints"] = c.topology.endpoints;
    t["spines"] = c.topology.spines;
    t["fanout"] = c.topology.fanout;
  } else {
    t["nodes"] = json::array();
    for (auto r : c.topology.nodes) t["nodes"].push_back(to_string(r));
    t["links"] = json::array();
    for (const auto& l : c.topology.links) {
      t["links"].push_back({{"a", l.a.value},
                            {"b", l.b.value},
                            {"bandwidth", l.bandwidth},
                            {"propagation", l.propagation},
                            {"duplex", l.duplex == Duplex::full ? "full" : "half"},
                            {"turnaround", l.turnaround}});
    }
  }
  j["topology"] = t;
  j["routing"] = to_string(c.routing);
  j["header"] = {{"overhead", c.header.overhead}, {"on_data", c.header.header_on_data}};
  json r = {{"queue_capacity", c.requester.queue_capacity},
            {"issue_interval", c.requester.issue_interval},
            {"cache_lines", c.requester.cache_lines},
            {"interleave_granularity", c.requester.interleave_granularity}};
  if (!c.overrides.empty()) {
    r["overrides"] = json::array();
    for (const auto& o : c.overrides) {
      json x = {{"index", o.index}};
      if (o.queue_capacity) x["queue_capacity"] = *o.queue_capacity;
      if (o.issue_interval) x["issue_interval"] = *o.issue_interval;
      if (o.cache_lines) x["cache_lines"] = *o.cache_lines;
      if (o.total_requests) x["total_requests"] = *o.total_requests;
      if (o.warmup_requests) x["warmup_requests"] = *o.warmup_requests;
      if (o.read_ratio) x["read_ratio"] = *o.read_ratio;
      r["overrides"].push_back(x);
    }
  }
  j["requesters"] = r;
  const auto& w = c.workload;
  j["workload"] = {{"pattern", to_string(w.kind)},   {"footprint_bytes", w.footprint_bytes},
                   {"hot_fraction", w.hot_fraction}, {"hot_prob", w.hot_prob},
                   {"read_ratio", w.read_ratio},     {"total_requests", w.total_requests},
                   {"warmup_requests", w.warmup_requests}, {"partition", w.partition}};
  if (!w.trace_path.empty()) j["workload"]["trace"] = w.trace_path;
  j["coherence"] = {{"enabled", c.coherence.enabled},
                    {"sf_capacity", c.coherence.sf_capacity},
                    {"victim_policy", to_string(c.coherence.policy.kind)},
                    {"invblk_max_len", c.coherence.policy.max_len},
                    {"shared_reads", c.coherence.shared_reads}};
  j["endpoint"] = {{"capacity_bytes", c.endpoint.capacity_bytes}};
  return j;
}

}  // namespace cxlsim
