#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/handover.hpp"
#include "vhsim/mobility.hpp"
#include "vhsim/net/link.hpp"
#include "vhsim/net/topology.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim {

enum class Mode : std::uint8_t { Baseline, Proactive, ResetCwnd };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Baseline: return "baseline";
    case Mode::Proactive: return "proactive";
    case Mode::ResetCwnd: return "reset-cwnd";
  }
  return "?";
}

inline constexpr std::string_view kValidModes = "baseline, proactive, reset-cwnd";

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "baseline") return Mode::Baseline;
  if (s == "proactive") return Mode::Proactive;
  if (s == "reset-cwnd") return Mode::ResetCwnd;
  return std::nullopt;
}

struct SimConfig {
  Mode mode = Mode::Proactive;
  std::uint64_t seed = 1;
  SimTime end = SimTime::from_seconds(30);
  std::int64_t mss = 1460;
  std::int64_t w_default = 131072;
  std::int64_t sat_default_window = 65536;
  // Receive buffer per flow; defaults to w_default.
  std::optional<std::int64_t> buffer;
  std::int64_t initial_ssthresh = 65536;
  // Flow start times are shifted by a seeded draw from [0, start_jitter).
  SimTime start_jitter;

  std::int64_t receive_buffer() const { return buffer.value_or(w_default); }
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct NodeConfig {
  std::string name;
  NodeRole role = NodeRole::Router;
  // Mobile-node keys.
  std::string attach;
  RegistrationConfig registration;
  std::optional<std::int64_t> window_cap;
  std::vector<std::string> cached;

  friend bool operator==(const NodeConfig&, const NodeConfig&) = default;
};

struct LinkConfig {
  LinkSpec spec;
  std::string a;
  std::string b;
  std::int64_t bandwidth_bps = 0;

  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

struct FlowConfig {
  std::string name;
  std::string src;
  std::string dst;
  SimTime start;
  std::optional<std::int64_t> volume;
  handover::Weight weight;
  std::int64_t min_share = 0;

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct HandoverConfig {
  std::string id;
  SimTime time;
  handover::Direction direction = handover::Direction::TerrToSat;
  std::string target;
  std::string mn;
  // Moment the L3 switch happens for baseline/reset-cwnd runs and for the
  // proactive satellite -> terrestrial procedure. Defaults to `time`.
  std::optional<SimTime> execute;
  std::optional<RegistrationConfig> registration;
  SimTime ack_pacing;

  SimTime execute_time() const { return execute.value_or(time); }
  friend bool operator==(const HandoverConfig&, const HandoverConfig&) = default;
};

struct Scenario {
  std::string name;
  SimConfig sim;
  std::vector<NodeConfig> nodes;
  std::vector<LinkConfig> links;
  std::vector<FlowConfig> flows;
  std::vector<HandoverConfig> handovers;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  const NodeConfig* node(std::string_view n) const {
    for (const auto& x : nodes)
      if (x.name == n) return &x;
    return nullptr;
  }
  const LinkConfig* link(std::string_view n) const {
    for (const auto& x : links)
      if (x.spec.name == n) return &x;
    return nullptr;
  }

  Topology topology() const {
    Topology t;
    for (const auto& n : nodes) t.add_node(n.name, n.role);
    for (const auto& l : links) t.add_link(l.spec, l.a, l.b);
    return t;
  }

  /// Checks references, ranges and the handover script. Throws ConfigError.
  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto c = s.find(',', pos);
    if (c == std::string_view::npos) c = s.size();
    auto item = trim(s.substr(pos, c - pos));
    if (!item.empty()) out.push_back(item);
    pos = c + 1;
  }
  return out;
}

class Section {
 public:
  Section(std::string kind, std::string name, int line) : kind_(std::move(kind)), name_(std::move(name)), line_(line) {}

  void add(const std::string& key, std::string value, int line, const std::string& source) {
    if (values_.contains(key))
      throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "' in " + title());
    values_[key] = {std::move(value), line};
  }

  std::string title() const { return "[" + kind_ + (name_.empty() ? "" : "." + name_) + "]"; }
  const std::string& name() const { return name_; }
  int line() const { return line_; }

  void check_keys(const std::set<std::string>& allowed, const std::string& source) const {
    for (const auto& [k, v] : values_)
      if (!allowed.contains(k))
        throw ConfigError(source + ":" + std::to_string(v.line) + ": unknown key '" + k + "' in " + title());
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second.text;
  }

  std::string require(const std::string& key, const std::string& source) const {
    auto v = get(key);
    if (!v) throw ConfigError(source + ":" + std::to_string(line_) + ": " + title() + " is missing key '" + key + "'");
    return *v;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why, const std::string& source) const {
    auto it = values_.find(key);
    const int ln = it == values_.end() ? line_ : it->second.line;
    throw ConfigError(source + ":" + std::to_string(ln) + ": key '" + key + "' in " + title() + ": " + why);
  }

  std::int64_t integer(const std::string& key, const std::string& source) const {
    const auto text = require(key, source);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) fail(key, "expected an integer, got '" + text + "'", source);
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, const std::string& source) const {
    const auto text = require(key, source);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
      fail(key, "expected an unsigned integer, got '" + text + "'", source);
    return v;
  }

  SimTime time(const std::string& key, const std::string& source) const {
    const auto text = require(key, source);
    try {
      return SimTime::parse(text);
    } catch (const std::invalid_argument& e) {
      fail(key, std::string(e.what()) + " ('" + text + "')", source);
    }
  }

 private:
  struct Value {
    std::string text;
    int line;
  };
  std::string kind_;
  std::string name_;
  int line_;
  std::map<std::string, Value> values_;
};

}  // namespace detail

/// Parses the sectioned `key = value` scenario format. `source` names the
/// input in error messages.
inline Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>") {
  using detail::Section;
  std::vector<Section> sections;
  std::set<std::string> titles;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find_first_of("#;"); hash != std::string::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header");
      std::string head = detail::trim(line.substr(1, line.size() - 2));
      auto dot = head.find('.');
      std::string kind = head.substr(0, dot);
      std::string name = dot == std::string::npos ? "" : head.substr(dot + 1);
      static const std::set<std::string> kinds{"sim", "node", "link", "flow", "handover"};
      if (!kinds.contains(kind))
        throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown section '" + head + "'");
      if ((kind == "sim") != name.empty())
        throw ConfigError(source + ":" + std::to_string(line_no) + ": section '" + head +
                          (kind == "sim" ? "' takes no name" : "' needs a name"));
      if (!titles.insert(head).second)
        throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate section '" + head + "'");
      sections.emplace_back(kind, name, line_no);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    if (sections.empty())
      throw ConfigError(source + ":" + std::to_string(line_no) + ": key outside of any section");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    sections.back().add(key, value, line_no, source);
  }

  Scenario sc;
  bool have_sim = false;
  for (const auto& sec : sections) {
    const std::string t = sec.title();
    if (t == "[sim]") {
      have_sim = true;
      sec.check_keys({"name", "mode", "seed", "end", "mss", "w_default", "sat_default_window", "buffer",
                      "initial_ssthresh", "start_jitter"},
                     source);
      auto& s = sc.sim;
      if (auto v = sec.get("name")) sc.name = *v;
      if (auto v = sec.get("mode")) {
        auto m = parse_mode(*v);
        if (!m) sec.fail("mode", "unknown mode '" + *v + "' (valid modes: " + std::string(kValidModes) + ")", source);
        s.mode = *m;
      }
      if (sec.has("seed")) s.seed = sec.unsigned_integer("seed", source);
      if (sec.has("end")) s.end = sec.time("end", source);
      if (sec.has("mss")) s.mss = sec.integer("mss", source);
      if (sec.has("w_default")) s.w_default = sec.integer("w_default", source);
      if (sec.has("sat_default_window")) s.sat_default_window = sec.integer("sat_default_window", source);
      if (sec.has("buffer")) s.buffer = sec.integer("buffer", source);
      if (sec.has("initial_ssthresh")) s.initial_ssthresh = sec.integer("initial_ssthresh", source);
      if (sec.has("start_jitter")) s.start_jitter = sec.time("start_jitter", source);
    } else if (t.starts_with("[node.")) {
      sec.check_keys({"role", "attach", "registration", "proxy", "window_cap", "cached"}, source);
      NodeConfig n;
      n.name = sec.name();
      const auto role_text = sec.require("role", source);
      auto role = parse_node_role(role_text);
      if (!role) sec.fail("role", "unknown role '" + role_text + "' (valid: cn, ha, gateway, mn, router)", source);
      n.role = *role;
      const bool mobile = n.role == NodeRole::Mn;
      for (const char* k : {"attach", "registration", "proxy", "window_cap", "cached"})
        if (!mobile && sec.has(k)) sec.fail(k, "only valid for role = mn", source);
      if (mobile) {
        n.attach = sec.require("attach", source);
        if (auto v = sec.get("registration")) {
          auto o = parse_registration_origin(*v);
          if (!o) sec.fail("registration", "expected mn or proxy", source);
          n.registration.origin = *o;
        }
        if (auto v = sec.get("proxy")) n.registration.proxy_location = *v;
        if (sec.has("window_cap")) n.window_cap = sec.integer("window_cap", source);
        if (auto v = sec.get("cached")) n.cached = detail::split_list(*v);
      }
      sc.nodes.push_back(std::move(n));
    } else if (t.starts_with("[link.")) {
      sec.check_keys({"kind", "a", "b", "bandwidth", "delay", "queue", "availability"}, source);
      LinkConfig l;
      l.spec.name = sec.name();
      const auto kind_text = sec.require("kind", source);
      auto kind = parse_link_kind(kind_text);
      if (!kind) sec.fail("kind", "unknown link kind '" + kind_text + "' (valid: wired, wlan, gprs, sat)", source);
      l.spec.kind = *kind;
      l.a = sec.require("a", source);
      l.b = sec.require("b", source);
      l.bandwidth_bps = sec.integer("bandwidth", source);
      if (l.bandwidth_bps <= 0 || l.bandwidth_bps % 8 != 0)
        sec.fail("bandwidth", "must be a positive multiple of 8 bits/second", source);
      l.spec.bandwidth = l.bandwidth_bps / 8;
      l.spec.prop_delay = sec.time("delay", source);
      l.spec.queue_capacity = sec.integer("queue", source);
      if (auto v = sec.get("availability")) {
        for (const auto& item : detail::split_list(*v)) {
          auto colon = item.find(':');
          if (colon == std::string::npos) sec.fail("availability", "intervals are written start:end", source);
          try {
            l.spec.availability.push_back(
                {SimTime::parse(detail::trim(item.substr(0, colon))), SimTime::parse(detail::trim(item.substr(colon + 1)))});
          } catch (const std::invalid_argument& e) {
            sec.fail("availability", e.what(), source);
          }
        }
      }
      sc.links.push_back(std::move(l));
    } else if (t.starts_with("[flow.")) {
      sec.check_keys({"src", "dst", "start", "volume", "weight", "min_share"}, source);
      FlowConfig f;
      f.name = sec.name();
      f.src = sec.require("src", source);
      f.dst = sec.require("dst", source);
      if (sec.has("start")) f.start = sec.time("start", source);
      if (auto v = sec.get("volume"); v && *v != "unlimited") f.volume = sec.integer("volume", source);
      if (auto v = sec.get("weight")) {
        try {
          f.weight = handover::Weight::parse(*v);
        } catch (const ConfigError& e) {
          sec.fail("weight", e.what(), source);
        }
      }
      if (sec.has("min_share")) f.min_share = sec.integer("min_share", source);
      sc.flows.push_back(std::move(f));
    } else {
      sec.check_keys({"time", "direction", "target", "mn", "execute", "registration", "proxy", "ack_pacing"}, source);
      HandoverConfig h;
      h.id = sec.name();
      h.time = sec.time("time", source);
      const auto dir_text = sec.require("direction", source);
      auto dir = handover::parse_direction(dir_text);
      if (!dir)
        sec.fail("direction", "unknown direction '" + dir_text + "' (valid: terr_to_sat, sat_to_terr, terr_to_terr, intra_sat)",
                 source);
      h.direction = *dir;
      h.target = sec.require("target", source);
      if (auto v = sec.get("mn")) h.mn = *v;
      if (sec.has("execute")) h.execute = sec.time("execute", source);
      if (sec.has("registration") || sec.has("proxy")) {
        RegistrationConfig r;
        if (auto v = sec.get("registration")) {
          auto o = parse_registration_origin(*v);
          if (!o) sec.fail("registration", "expected mn or proxy", source);
          r.origin = *o;
        }
        if (auto v = sec.get("proxy")) r.proxy_location = *v;
        h.registration = r;
      }
      if (sec.has("ack_pacing")) h.ack_pacing = sec.time("ack_pacing", source);
      sc.handovers.push_back(std::move(h));
    }
  }
  if (!have_sim) throw ConfigError(source + ": missing [sim] section");

  // Default mobile node for handovers when there is only one.
  std::vector<std::string> mns;
  for (const auto& n : sc.nodes)
    if (n.role == NodeRole::Mn) mns.push_back(n.name);
  for (auto& h : sc.handovers)
    if (h.mn.empty() && mns.size() == 1) h.mn = mns.front();
  std::stable_sort(sc.handovers.begin(), sc.handovers.end(),
                   [](const HandoverConfig& a, const HandoverConfig& b) { return a.time < b.time; });

  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario sc = parse_scenario(ss.str(), path);
  if (sc.name.empty()) sc.name = std::filesystem::path(path).stem().string();
  return sc;
}

inline void Scenario::validate() const {
  if (sim.end <= SimTime::zero()) throw ConfigError("[sim] end must be positive");
  if (sim.mss <= 0) throw ConfigError("[sim] mss must be positive");
  if (sim.w_default <= 0) throw ConfigError("[sim] w_default must be positive");
  if (sim.sat_default_window <= 0) throw ConfigError("[sim] sat_default_window must be positive");
  if (sim.receive_buffer() < sim.mss) throw ConfigError("[sim] buffer must hold at least one segment");
  if (sim.initial_ssthresh < 2 * sim.mss) throw ConfigError("[sim] initial_ssthresh must be at least 2*mss");
  if (sim.start_jitter < SimTime::zero()) throw ConfigError("[sim] start_jitter must be non-negative");

  const Topology topo = topology();
  const std::int64_t max_segment = sim.mss + kTcpIpHeaderBytes;
  for (const auto& l : links) l.spec.validate(max_segment);

  if (topo.nodes_with_role(NodeRole::Ha).size() != 1) throw ConfigError("exactly one node must have role = ha");
  const std::string ha = topo.nodes_with_role(NodeRole::Ha).front();

  for (const auto& n : nodes) {
    if (n.role != NodeRole::Mn) continue;
    auto attach = topo.find_link(n.attach);
    if (!attach || topo.link(*attach).spec.kind == LinkKind::Wired || topo.mobile_of(*attach) != n.name)
      throw ConfigError("[node." + n.name + "] attach = '" + n.attach + "' is not an access link of this node");
    if (!topo.fixed_route(topo.gateway_of(*attach), ha))
      throw ConfigError("[node." + n.name + "] no fixed route from '" + topo.gateway_of(*attach) + "' to the home agent");
    n.registration.validate(topo);
    if (n.window_cap && (*n.window_cap < 0 || *n.window_cap > sim.receive_buffer()))
      throw ConfigError("[node." + n.name + "] window_cap must lie in [0, buffer]");
    for (const auto& c : n.cached) {
      auto id = topo.find_link(c);
      if (!id || topo.link(*id).spec.kind == LinkKind::Wired || topo.mobile_of(*id) != n.name)
        throw ConfigError("[node." + n.name + "] cached = '" + c + "' is not an access link of this node");
    }
  }

  std::set<std::string> flow_names;
  for (const auto& f : flows) {
    if (topo.role(f.src) != NodeRole::Cn) throw ConfigError("[flow." + f.name + "] src must be a cn node");
    if (topo.role(f.dst) != NodeRole::Mn) throw ConfigError("[flow." + f.name + "] dst must be an mn node");
    if (!topo.fixed_route(f.src, ha)) throw ConfigError("[flow." + f.name + "] no route from src to the home agent");
    if (f.start < SimTime::zero() || f.start >= sim.end) throw ConfigError("[flow." + f.name + "] start outside [0, end)");
    if (f.volume && *f.volume <= 0) throw ConfigError("[flow." + f.name + "] volume must be positive");
    if (f.min_share < 0) throw ConfigError("[flow." + f.name + "] min_share must be non-negative");
  }

  std::map<std::string, std::string> current;
  for (const auto& n : nodes)
    if (n.role == NodeRole::Mn) current[n.name] = n.attach;
  std::map<std::string, SimTime> last_time;
  for (const auto& h : handovers) {
    const std::string where = "[handover." + h.id + "]";
    if (h.time < SimTime::zero() || h.time >= sim.end)
      throw ConfigError(where + " time " + h.time.str() + " outside [0, end=" + sim.end.str() + ")");
    if (h.execute && (*h.execute < h.time || *h.execute >= sim.end))
      throw ConfigError(where + " execute must lie in [time, end)");
    if (h.ack_pacing < SimTime::zero()) throw ConfigError(where + " ack_pacing must be non-negative");
    if (topo.role(h.mn) != NodeRole::Mn) throw ConfigError(where + " mn = '" + h.mn + "' is not a mobile node");
    auto target = topo.find_link(h.target);
    if (!target || topo.link(*target).spec.kind == LinkKind::Wired || topo.mobile_of(*target) != h.mn)
      throw ConfigError(where + " target = '" + h.target + "' is not an access link of " + h.mn);
    if (auto it = last_time.find(h.mn); it != last_time.end() && !(it->second < h.time))
      throw ConfigError(where + " handovers of one mobile node need distinct times");
    last_time[h.mn] = h.execute_time();
    const LinkKind from = link(current[h.mn])->spec.kind;
    const LinkKind to = topo.link(*target).spec.kind;
    using handover::Direction;
    bool ok = false;
    switch (h.direction) {
      case Direction::TerrToSat: ok = is_terrestrial_access(from) && to == LinkKind::Sat; break;
      case Direction::SatToTerr: ok = from == LinkKind::Sat && is_terrestrial_access(to); break;
      case Direction::TerrToTerr: ok = is_terrestrial_access(from) && is_terrestrial_access(to); break;
      case Direction::IntraSat: ok = from == LinkKind::Sat && h.target == current[h.mn]; break;
    }
    if (!ok)
      throw ConfigError(where + " direction " + std::string(handover::to_string(h.direction)) + " does not match " +
                        std::string(to_string(from)) + " -> " + std::string(to_string(to)) + " (from '" +
                        current[h.mn] + "')");
    if (h.direction != Direction::IntraSat && h.target == current[h.mn])
      throw ConfigError(where + " target is already the current attachment");
    if (!topo.fixed_route(topo.gateway_of(*target), ha))
      throw ConfigError(where + " no fixed route from '" + topo.gateway_of(*target) + "' to the home agent");
    if (h.registration) h.registration->validate(topo);
    current[h.mn] = h.target;
  }
}

/// Canonical text form: every key spelled out, fixed section and key order.
/// parse_scenario(to_canonical(s)) == s.
inline std::string to_canonical(const Scenario& sc) {
  std::ostringstream o;
  const auto& s = sc.sim;
  o << "[sim]\n";
  if (!sc.name.empty()) o << "name = " << sc.name << "\n";
  o << "mode = " << to_string(s.mode) << "\n"
    << "seed = " << s.seed << "\n"
    << "end = " << s.end.str() << "\n"
    << "mss = " << s.mss << "\n"
    << "w_default = " << s.w_default << "\n"
    << "sat_default_window = " << s.sat_default_window << "\n";
  if (s.buffer) o << "buffer = " << *s.buffer << "\n";
  o << "initial_ssthresh = " << s.initial_ssthresh << "\n"
    << "start_jitter = " << s.start_jitter.str() << "\n";
  for (const auto& n : sc.nodes) {
    o << "\n[node." << n.name << "]\nrole = " << to_string(n.role) << "\n";
    if (n.role != NodeRole::Mn) continue;
    o << "attach = " << n.attach << "\n"
      << "registration = " << to_string(n.registration.origin) << "\n";
    if (!n.registration.proxy_location.empty()) o << "proxy = " << n.registration.proxy_location << "\n";
    if (n.window_cap) o << "window_cap = " << *n.window_cap << "\n";
    if (!n.cached.empty()) {
      o << "cached = ";
      for (std::size_t i = 0; i < n.cached.size(); ++i) o << (i ? ", " : "") << n.cached[i];
      o << "\n";
    }
  }
  for (const auto& l : sc.links) {
    o << "\n[link." << l.spec.name << "]\n"
      << "kind = " << to_string(l.spec.kind) << "\n"
      << "a = " << l.a << "\nb = " << l.b << "\n"
      << "bandwidth = " << l.bandwidth_bps << "\n"
      << "delay = " << l.spec.prop_delay.str() << "\n"
      << "queue = " << l.spec.queue_capacity << "\n";
    if (!l.spec.availability.empty()) {
      o << "availability = ";
      for (std::size_t i = 0; i < l.spec.availability.size(); ++i)
        o << (i ? ", " : "") << l.spec.availability[i].start.str() << ":" << l.spec.availability[i].end.str();
      o << "\n";
    }
  }
  for (const auto& f : sc.flows) {
    o << "\n[flow." << f.name << "]\n"
      << "src = " << f.src << "\ndst = " << f.dst << "\n"
      << "start = " << f.start.str() << "\n"
      << "volume = " << (f.volume ? std::to_string(*f.volume) : std::string("unlimited")) << "\n"
      << "weight = " << f.weight.str() << "\n"
      << "min_share = " << f.min_share << "\n";
  }
  for (const auto& h : sc.handovers) {
    o << "\n[handover." << h.id << "]\n"
      << "time = " << h.time.str() << "\n"
      << "direction = " << handover::to_string(h.direction) << "\n"
      << "target = " << h.target << "\n"
      << "mn = " << h.mn << "\n";
    if (h.execute) o << "execute = " << h.execute->str() << "\n";
    if (h.registration) {
      o << "registration = " << to_string(h.registration->origin) << "\n";
      if (!h.registration->proxy_location.empty()) o << "proxy = " << h.registration->proxy_location << "\n";
    }
    o << "ack_pacing = " << h.ack_pacing.str() << "\n";
  }
  return o.str();
}

}  // namespace vhsim
