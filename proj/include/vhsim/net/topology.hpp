#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/net/link.hpp"

namespace vhsim {

enum class NodeRole : std::uint8_t { Cn, Ha, Gateway, Mn, Router };

inline std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Cn: return "cn";
    case NodeRole::Ha: return "ha";
    case NodeRole::Gateway: return "gateway";
    case NodeRole::Mn: return "mn";
    case NodeRole::Router: return "router";
  }
  return "?";
}

inline std::optional<NodeRole> parse_node_role(std::string_view s) {
  if (s == "cn") return NodeRole::Cn;
  if (s == "ha") return NodeRole::Ha;
  if (s == "gateway") return NodeRole::Gateway;
  if (s == "mn") return NodeRole::Mn;
  if (s == "router") return NodeRole::Router;
  return std::nullopt;
}

struct PathHop {
  std::string from;
  std::string to;
  LinkId link = kNoLink;
  LinkSpec spec;
};

/// Ordered list of hops. RTT terms for registration timing are computed on these.
struct Path {
  std::vector<PathHop> hops;

  SimTime one_way_delay() const {
    SimTime d{};
    for (const auto& h : hops) d += h.spec.prop_delay;
    return d;
  }

  std::int64_t bottleneck_bandwidth() const {
    std::int64_t bw = 0;
    for (const auto& h : hops)
      if (bw == 0 || h.spec.bandwidth < bw) bw = h.spec.bandwidth;
    return bw;
  }

  void append(const Path& tail) { hops.insert(hops.end(), tail.hops.begin(), tail.hops.end()); }
};

/// Round-trip latency of a probe over `p` with empty queues: the probe is
/// serialized and propagated on every hop in both directions.
inline SimTime path_rtt(const Path& p, std::int64_t probe_bytes, SimTime at) {
  SimTime one_way{};
  for (const auto& h : p.hops) {
    if (!h.spec.available_at(at))
      throw UnreachableError("link '" + h.spec.name + "' has no coverage at " + at.str());
    one_way += h.spec.prop_delay + h.spec.serialization(probe_bytes);
  }
  return one_way * 2;
}

struct TopologyLink {
  LinkSpec spec;
  std::string a;
  std::string b;
};

class Topology {
 public:
  void add_node(const std::string& name, NodeRole role) {
    if (roles_.contains(name)) throw ConfigError("duplicate node '" + name + "'");
    roles_.emplace(name, role);
    order_.push_back(name);
  }

  LinkId add_link(LinkSpec spec, const std::string& a, const std::string& b) {
    for (const auto& n : {a, b})
      if (!roles_.contains(n)) throw ConfigError("link '" + spec.name + "' references unknown node '" + n + "'");
    if (a == b) throw ConfigError("link '" + spec.name + "' is a self loop");
    if (find_link(spec.name)) throw ConfigError("duplicate link '" + spec.name + "'");
    const bool a_mn = roles_.at(a) == NodeRole::Mn;
    const bool b_mn = roles_.at(b) == NodeRole::Mn;
    if (spec.kind == LinkKind::Wired && (a_mn || b_mn))
      throw ConfigError("wired link '" + spec.name + "' cannot attach a mobile node");
    if (spec.kind != LinkKind::Wired && a_mn == b_mn)
      throw ConfigError("access link '" + spec.name + "' must join exactly one mobile node to the fixed network");
    links_.push_back({std::move(spec), a, b});
    return static_cast<LinkId>(links_.size() - 1);
  }

  bool has_node(std::string_view name) const { return roles_.contains(std::string(name)); }
  std::optional<NodeRole> role(std::string_view name) const {
    auto it = roles_.find(std::string(name));
    if (it == roles_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<std::string>& nodes() const { return order_; }
  const std::vector<TopologyLink>& links() const { return links_; }
  const TopologyLink& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }

  std::optional<LinkId> find_link(std::string_view name) const {
    for (std::size_t i = 0; i < links_.size(); ++i)
      if (links_[i].spec.name == name) return static_cast<LinkId>(i);
    return std::nullopt;
  }

  std::vector<std::string> nodes_with_role(NodeRole r) const {
    std::vector<std::string> out;
    for (const auto& n : order_)
      if (roles_.at(n) == r) out.push_back(n);
    return out;
  }

  /// Access links attached to a mobile node, in declaration order.
  std::vector<LinkId> access_links(std::string_view mn) const {
    std::vector<LinkId> out;
    for (std::size_t i = 0; i < links_.size(); ++i)
      if (links_[i].spec.kind != LinkKind::Wired && (links_[i].a == mn || links_[i].b == mn))
        out.push_back(static_cast<LinkId>(i));
    return out;
  }

  /// Fixed-network end of an access link.
  const std::string& gateway_of(LinkId access) const {
    const auto& l = link(access);
    return roles_.at(l.a) == NodeRole::Mn ? l.b : l.a;
  }

  /// Mobile end of an access link.
  const std::string& mobile_of(LinkId access) const {
    const auto& l = link(access);
    return roles_.at(l.a) == NodeRole::Mn ? l.a : l.b;
  }

  /// Shortest path over wired links by one-way propagation delay. Ties go to
  /// fewer hops, then to the earlier-declared link.
  std::optional<Path> fixed_route(const std::string& from, const std::string& to) const {
    if (!has_node(from) || !has_node(to)) return std::nullopt;
    if (from == to) return Path{};
    using Cost = std::tuple<std::int64_t, std::size_t>;
    std::map<std::string, Cost> best;
    std::map<std::string, std::pair<std::string, LinkId>> prev;
    using Item = std::tuple<std::int64_t, std::size_t, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    best[from] = {0, 0};
    pq.emplace(0, 0, from);
    while (!pq.empty()) {
      auto [d, h, node] = pq.top();
      pq.pop();
      if (best.at(node) != Cost{d, h}) continue;
      if (node == to) break;
      for (std::size_t i = 0; i < links_.size(); ++i) {
        const auto& l = links_[i];
        if (l.spec.kind != LinkKind::Wired) continue;
        std::string next;
        if (l.a == node) next = l.b;
        else if (l.b == node) next = l.a;
        else continue;
        Cost c{d + l.spec.prop_delay.us(), h + 1};
        auto it = best.find(next);
        if (it == best.end() || c < it->second) {
          best[next] = c;
          prev[next] = {node, static_cast<LinkId>(i)};
          pq.emplace(std::get<0>(c), std::get<1>(c), next);
        }
      }
    }
    if (!best.contains(to)) return std::nullopt;
    Path p;
    for (std::string cur = to; cur != from;) {
      const auto& [pn, lid] = prev.at(cur);
      p.hops.push_back({pn, cur, lid, links_[static_cast<std::size_t>(lid)].spec});
      cur = pn;
    }
    std::reverse(p.hops.begin(), p.hops.end());
    return p;
  }

  /// Mobile node -> access link -> gateway -> fixed route to `dest`.
  std::optional<Path> access_route(LinkId access, const std::string& dest) const {
    const std::string& gw = gateway_of(access);
    auto tail = fixed_route(gw, dest);
    if (!tail) return std::nullopt;
    Path p;
    p.hops.push_back({mobile_of(access), gw, access, link(access).spec});
    p.append(*tail);
    return p;
  }

 private:
  std::map<std::string, NodeRole> roles_;
  std::vector<std::string> order_;
  std::vector<TopologyLink> links_;
};

struct RttTable {
  SimTime mn_sat_cn;
  SimTime mn_sat_ha;
  SimTime mn_old_ha;
};

/// Nodes and access links that anchor one handover's RTT terms.
struct HandoverRoles {
  std::string mn;
  std::string cn;
  std::string ha;
  std::string sat_link;
  std::string old_link;
};

/// The three round-trip terms of the registration delay, each twice the
/// one-way propagation sum along the declared path.
inline RttTable rtt_table(const Topology& topo, const HandoverRoles& roles) {
  auto need_node = [&](const std::string& n, NodeRole r, const char* what) {
    if (n.empty() || topo.role(n) != r) throw ConfigError(std::string("topology has no ") + what + " node '" + n + "'");
  };
  need_node(roles.mn, NodeRole::Mn, "mobile");
  need_node(roles.cn, NodeRole::Cn, "correspondent");
  need_node(roles.ha, NodeRole::Ha, "home agent");
  auto need_access = [&](const std::string& name, const char* what) {
    auto id = topo.find_link(name);
    if (!id || topo.link(*id).spec.kind == LinkKind::Wired || topo.mobile_of(*id) != roles.mn)
      throw ConfigError(std::string("topology has no ") + what + " access link '" + name + "' for " + roles.mn);
    return *id;
  };
  const LinkId sat = need_access(roles.sat_link, "satellite");
  const LinkId old = need_access(roles.old_link, "old-network");
  auto route = [&](LinkId l, const std::string& dest) {
    auto p = topo.access_route(l, dest);
    if (!p) throw ConfigError("no route from '" + topo.gateway_of(l) + "' to '" + dest + "'");
    return *p;
  };
  return RttTable{route(sat, roles.cn).one_way_delay() * 2, route(sat, roles.ha).one_way_delay() * 2,
                  route(old, roles.ha).one_way_delay() * 2};
}

}  // namespace vhsim
