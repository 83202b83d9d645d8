#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/net/topology.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim {

enum class RegistrationOrigin : std::uint8_t { Mn, Proxy };

inline std::string_view to_string(RegistrationOrigin o) { return o == RegistrationOrigin::Mn ? "mn" : "proxy"; }

inline std::optional<RegistrationOrigin> parse_registration_origin(std::string_view s) {
  if (s == "mn") return RegistrationOrigin::Mn;
  if (s == "proxy") return RegistrationOrigin::Proxy;
  return std::nullopt;
}

/// Who sends the binding update: the mobile node itself, or a proxy in an
/// access gateway acting on its behalf.
struct RegistrationConfig {
  RegistrationOrigin origin = RegistrationOrigin::Mn;
  std::string proxy_location;

  friend bool operator==(const RegistrationConfig&, const RegistrationConfig&) = default;

  void validate(const Topology& topo) const {
    if (origin != RegistrationOrigin::Proxy) return;
    if (proxy_location.empty() || !topo.has_node(proxy_location))
      throw ConfigError("proxy registration needs an existing proxy node, got '" + proxy_location + "'");
    if (topo.role(proxy_location) == NodeRole::Mn)
      throw ConfigError("proxy '" + proxy_location + "' must be a fixed-network node");
  }
};

struct Binding {
  LinkId attachment = kNoLink;
  std::string gateway;
  SimTime registered_at;
};

/// Home-agent bindings. Every registration is kept; the newest is active.
class BindingTable {
 public:
  void register_binding(const std::string& mn, Binding b) {
    auto& list = entries_[mn];
    if (!list.empty() && !(list.back().registered_at < b.registered_at))
      throw InvariantViolation("binding registrations for " + mn + " must be strictly increasing in time");
    list.push_back(std::move(b));
  }

  const Binding* active(const std::string& mn) const {
    auto it = entries_.find(mn);
    if (it == entries_.end() || it->second.empty()) return nullptr;
    return &it->second.back();
  }

  const std::vector<Binding>& bindings(const std::string& mn) const {
    static const std::vector<Binding> kEmpty;
    auto it = entries_.find(mn);
    return it == entries_.end() ? kEmpty : it->second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<Binding>> entries_;
};

struct BindingUpdate {
  std::string mn;
  LinkId attachment = kNoLink;
  std::string origin_node;
  std::size_t handover = 0;
};

struct BindingAck {
  std::string mn;
  LinkId attachment = kNoLink;
  LinkId previous = kNoLink;
  std::string origin_node;
  std::size_t handover = 0;
  // Per flow: highest byte the home agent ever forwarded toward the previous
  // attachment. Nothing is forwarded there once the binding has moved.
  std::map<FlowId, std::int64_t> previous_high_water;
};

/// Home agent / rendezvous server. Registration is processed instantly;
/// all registration latency comes from the paths the signalling crosses.
class HomeAgent {
 public:
  BindingTable& table() { return table_; }
  const BindingTable& table() const { return table_; }
  std::uint64_t no_binding_drops() const { return no_binding_drops_; }

  BindingAck on_binding_update(const Topology& topo, const BindingUpdate& bu, SimTime now) {
    const Binding* prev = table_.active(bu.mn);
    BindingAck ack;
    ack.mn = bu.mn;
    ack.attachment = bu.attachment;
    ack.previous = prev ? prev->attachment : kNoLink;
    ack.origin_node = bu.origin_node;
    ack.handover = bu.handover;
    if (prev) {
      for (const auto& [key, hw] : high_water_)
        if (key.second == prev->attachment) ack.previous_high_water[key.first] = hw;
    }
    table_.register_binding(bu.mn, Binding{bu.attachment, topo.gateway_of(bu.attachment), now});
    return ack;
  }

  /// Attachment a segment for `mn` is forwarded to, or nullopt (counted) when
  /// the node has never registered.
  std::optional<Binding> route(const std::string& mn, const Segment& s) {
    const Binding* b = table_.active(mn);
    if (!b) {
      ++no_binding_drops_;
      return std::nullopt;
    }
    if (s.is(kData)) {
      auto& hw = high_water_[{s.flow, b->attachment}];
      hw = std::max(hw, s.end());
    }
    return *b;
  }

 private:
  BindingTable table_;
  std::map<std::pair<FlowId, LinkId>, std::int64_t> high_water_;
  std::uint64_t no_binding_drops_ = 0;
};

}  // namespace vhsim
