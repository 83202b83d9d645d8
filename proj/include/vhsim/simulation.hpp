#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/handover.hpp"
#include "vhsim/kernel.hpp"
#include "vhsim/metrics.hpp"
#include "vhsim/mobility.hpp"
#include "vhsim/net/link.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/net/topology.hpp"
#include "vhsim/scenario.hpp"
#include "vhsim/sim_time.hpp"
#include "vhsim/tcp/receiver.hpp"
#include "vhsim/tcp/sender.hpp"
#include "vhsim/trace.hpp"

namespace vhsim {

inline constexpr SimTime kBindingRetryInterval = SimTime::from_seconds(1);
inline constexpr int kMaxBindingAttempts = 4;
// Upper bound on the window over which the handover gap is measured.
inline constexpr SimTime kGapHorizon = SimTime::from_seconds(10);

/// Where a flow is in the satellite -> terrestrial window procedure.
enum class ShapingStage : std::uint8_t { None, Boost, Drain, Ramp };

struct HandoverRecord {
  HandoverConfig cfg;
  std::size_t mobile = 0;
  LinkId old_link = kNoLink;
  LinkId new_link = kNoLink;
  bool triggered = false;
  bool aborted = false;
  std::optional<handover::HandoverPlan> plan;
  std::optional<SimTime> t_a0, t_r0, t_r1, t_r3;
  RegistrationConfig registration;
  int bu_attempts = 0;
  std::optional<BindingAck> binding_ack;
  bool buack_at_mn = false;
  // Channels from the home agent to the mobile node via the old attachment
  // that the new path does not share, and the whole new path.
  std::set<std::size_t> old_only_channels;
  std::set<std::size_t> new_channels;
};

/// One scenario run: builds the network, drives the TCP endpoints and the
/// handover script, and collects metrics. Not movable; event handlers point
/// back into the instance.
class Simulation {
 public:
  using AckObserver = std::function<void(std::size_t flow, SimTime now, const tcp::TcpSenderState&)>;

  Simulation(Scenario sc, Mode mode, std::uint64_t seed, std::ostream* trace = nullptr)
      : sc_(std::move(sc)), mode_(mode), seed_(seed), kernel_(seed), trace_(trace) {
    sc_.validate();
    topo_ = sc_.topology();
    ha_name_ = topo_.nodes_with_role(NodeRole::Ha).front();
    build_channels();
    build_mobiles();
    build_flows();
    seed_estimates();
    build_handovers();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void set_ack_observer(AckObserver f) { ack_observer_ = std::move(f); }

  /// Runs events up to min(t, end).
  void advance(SimTime t) { kernel_.run_until(std::min(t, sc_.sim.end)); }

  RunMetrics run() {
    advance(sc_.sim.end);
    return metrics();
  }

  const Scenario& scenario() const { return sc_; }
  Mode mode() const { return mode_; }
  SimTime now() const { return kernel_.now(); }
  const Topology& topology() const { return topo_; }
  const HomeAgent& home_agent() const { return ha_; }

  std::size_t flow_count() const { return flows_.size(); }
  std::size_t flow_index(const std::string& name) const {
    for (std::size_t i = 0; i < flows_.size(); ++i)
      if (flows_[i]->cfg.name == name) return i;
    throw ConfigError("no flow named '" + name + "'");
  }
  const tcp::TcpSender& sender(std::size_t i) const { return flows_.at(i)->sender; }
  const tcp::TcpReceiver& receiver(std::size_t i) const { return flows_.at(i)->receiver; }
  const std::vector<SimTime>& rto_times(std::size_t i) const { return flows_.at(i)->rto_times; }
  const std::vector<SimTime>& fast_retransmit_times(std::size_t i) const { return flows_.at(i)->fast_rexmit_times; }
  ShapingStage shaping_stage(std::size_t i) const { return flows_.at(i)->stage; }

  const std::vector<HandoverRecord>& handovers() const { return handovers_; }

  const Channel* channel(const std::string& from, const std::string& to) const {
    for (const auto& c : channels_)
      if (c.from() == from && c.to() == to) return &c;
    return nullptr;
  }
  const std::vector<Channel>& channels() const { return channels_; }

  RunMetrics metrics() const {
    RunMetrics m;
    m.scenario = sc_.name;
    m.mode = std::string(to_string(mode_));
    m.seed = seed_;
    m.no_binding_drops = ha_.no_binding_drops();
    for (const auto& c : channels_)
      m.queues.push_back({c.label(), c.overflow_drops(), c.coverage_drops(), c.peak_occupancy()});

    std::vector<std::int64_t> in_flight(flows_.size(), 0);
    for (const auto& [id, p] : packets_)
      if (p.seg.is(kData)) in_flight.at(p.seg.flow) += p.seg.payload_len;

    for (std::size_t i = 0; i < flows_.size(); ++i) {
      const FlowState& f = *flows_[i];
      FlowMetrics fm;
      fm.flow_id = f.cfg.name;
      fm.bytes_in_order = f.receiver.state().rcv_nxt;
      if (f.started) {
        const SimTime stop = f.completed.value_or(kernel_.now());
        const SimTime dur = stop - *f.started;
        if (dur > SimTime::zero())
          fm.goodput_bps = static_cast<std::int64_t>(static_cast<__int128>(fm.bytes_in_order) * 8 * 1000000 / dur.us());
      }
      fm.retransmits = f.sender.retransmits();
      fm.spurious_retransmits = f.spurious;
      fm.rto_count = f.sender.rto_count();
      fm.fast_retransmits = f.sender.fast_retransmits();
      fm.drops_old_path = f.drops_old;
      fm.drops_new_path = f.drops_new;
      fm.max_rwnd_increase = f.max_rwnd_increase;
      fm.bytes_sent = f.sent;
      fm.bytes_delivered = f.delivered;
      fm.bytes_dropped = f.dropped;
      fm.bytes_in_flight = in_flight[i];
      if (fm.bytes_sent != fm.bytes_delivered + fm.bytes_dropped + fm.bytes_in_flight)
        throw InvariantViolation("byte conservation broken for flow " + f.cfg.name);
      if (fm.spurious_retransmits > fm.retransmits)
        throw InvariantViolation("more spurious retransmissions than retransmissions for flow " + f.cfg.name);

      if (auto hi = mobiles_[f.mobile].first_handover) {
        const HandoverRecord& h = handovers_[*hi];
        fm.t_a0 = h.t_a0;
        if (const auto* a = f.advert(*hi)) {
          fm.t_a1 = a->t_a1;
          fm.t_a2 = a->t_a2;
        }
        fm.t_r0 = h.t_r0;
        fm.t_r1 = h.t_r1;
        fm.t_r3 = h.t_r3;
        if (h.triggered && !h.aborted && h.cfg.direction != handover::Direction::IntraSat)
          fm.old_path_enqueues_after_tr1 = f.old_enqueues_after_tr1;
        fm.handover_gap = handover_gap(f, h);
      }
      m.flows.push_back(std::move(fm));
    }
    return m;
  }

 private:
  enum class PacketRole : std::uint8_t { DataToHa, DataToMn, AckToCn, BindingUpdate, BindingAckToOrigin, BindingAckRelay };

  struct Packet {
    Segment seg;
    PacketRole role = PacketRole::DataToHa;
    std::vector<std::size_t> route;
    std::size_t hop = 0;
    std::optional<SimTime> ha_forwarded_at;
    std::size_t handover = 0;
  };

  struct MobileState {
    std::string name;
    LinkId attachment = kNoLink;
    RegistrationConfig registration;
    handover::PathEstimateCache cache;
    std::vector<std::size_t> flows;
    std::optional<std::size_t> first_handover;
    std::string default_cn;
  };

  struct FlowState {
    FlowState(FlowConfig c, FlowId i, std::size_t mob, const tcp::TcpConfig& tc, std::int64_t buffer,
              tcp::WindowCap cap)
        : cfg(std::move(c)), id(i), mobile(mob), receiver(i, buffer, cap),
          sender(tc, cfg.volume, receiver.advertised_window()), last_rwnd(receiver.advertised_window()) {}

    FlowConfig cfg;
    FlowId id;
    std::size_t mobile;
    tcp::TcpReceiver receiver;
    tcp::TcpSender sender;
    std::optional<SimTime> started;
    std::optional<SimTime> completed;
    std::uint64_t tx_counter = 0;
    std::optional<EventId> rto_event;
    std::optional<SimTime> rto_at;

    std::int64_t sent = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
    std::uint64_t spurious = 0;
    std::int64_t last_rwnd = 0;
    std::int64_t max_rwnd_increase = 0;
    std::vector<SimTime> rto_times;
    std::vector<SimTime> fast_rexmit_times;

    // Advertisement timeline, one entry per handover of the mobile node.
    struct Advertisement {
      std::size_t handover = 0;
      std::uint64_t emission = 0;
      std::optional<SimTime> t_a1, t_a2;
      std::optional<std::uint64_t> marker;
    };
    std::vector<Advertisement> adverts;
    std::optional<SimTime> last_ha_arrival;

    const Advertisement* advert(std::size_t hi) const {
      for (const auto& a : adverts)
        if (a.handover == hi) return &a;
      return nullptr;
    }

    // First handover of the mobile node.
    std::uint64_t drops_old = 0;
    std::uint64_t drops_new = 0;
    std::uint64_t old_enqueues_after_tr1 = 0;
    std::optional<SimTime> last_delivery;
    SimTime longest_gap{};

    ShapingStage stage = ShapingStage::None;
    std::size_t stage_handover = 0;
    std::optional<EventId> drain_timer;
    std::int64_t ramp_target = 0;
    std::int64_t last_cap = 0;
  };

  // ---- construction ----

  void build_channels() {
    const auto& links = topo_.links();
    for (std::size_t i = 0; i < links.size(); ++i) {
      const auto id = static_cast<LinkId>(i);
      channel_index_[{id, links[i].a}] = channels_.size();
      channels_.emplace_back(links[i].spec, id, links[i].a, links[i].b);
      channel_index_[{id, links[i].b}] = channels_.size();
      channels_.emplace_back(links[i].spec, id, links[i].b, links[i].a);
    }
  }

  void build_mobiles() {
    const auto cns = topo_.nodes_with_role(NodeRole::Cn);
    for (const auto& n : sc_.nodes) {
      if (n.role != NodeRole::Mn) continue;
      MobileState m;
      m.name = n.name;
      m.attachment = *topo_.find_link(n.attach);
      m.registration = n.registration;
      m.default_cn = cns.empty() ? std::string() : cns.front();
      ha_.table().register_binding(m.name, Binding{m.attachment, topo_.gateway_of(m.attachment), SimTime::zero()});
      mobile_index_[m.name] = mobiles_.size();
      mobiles_.push_back(std::move(m));
    }
  }

  void build_flows() {
    tcp::TcpConfig tc;
    tc.mss = sc_.sim.mss;
    tc.initial_window = 2 * sc_.sim.mss;
    tc.initial_ssthresh = sc_.sim.initial_ssthresh;
    for (const auto& fc : sc_.flows) {
      const std::size_t mi = mobile_index_.at(fc.dst);
      const auto id = static_cast<FlowId>(flows_.size());
      const auto* node = sc_.node(fc.dst);
      tcp::WindowCap cap = node->window_cap ? tcp::WindowCap(*node->window_cap) : tcp::kUnlimited;
      flows_.push_back(std::make_unique<FlowState>(fc, id, mi, tc, sc_.sim.receive_buffer(), cap));
      mobiles_[mi].flows.push_back(id);
      if (mobiles_[mi].default_cn.empty() || mobiles_[mi].flows.size() == 1) mobiles_[mi].default_cn = fc.src;
    }
    for (auto& fp : flows_) {
      SimTime start = fp->cfg.start;
      if (sc_.sim.start_jitter > SimTime::zero())
        start += SimTime::from_us(static_cast<std::int64_t>(kernel_.rng().below(
            static_cast<std::uint64_t>(sc_.sim.start_jitter.us()))));
      if (start >= sc_.sim.end) continue;
      const std::size_t fi = fp->id;
      kernel_.schedule(start, EventKind::AppSend, [this, fi] { start_flow(fi); });
    }
  }

  void seed_estimates() {
    for (const auto& n : sc_.nodes) {
      if (n.role != NodeRole::Mn) continue;
      MobileState& m = mobiles_[mobile_index_.at(n.name)];
      for (const auto& c : n.cached) store_estimate(m, *topo_.find_link(c), SimTime::zero());
    }
  }

  void build_handovers() {
    for (std::size_t i = 0; i < sc_.handovers.size(); ++i) {
      HandoverRecord h;
      h.cfg = sc_.handovers[i];
      h.mobile = mobile_index_.at(h.cfg.mn);
      h.registration = h.cfg.registration.value_or(mobiles_[h.mobile].registration);
      if (!mobiles_[h.mobile].first_handover) mobiles_[h.mobile].first_handover = i;
      handovers_.push_back(std::move(h));
      kernel_.schedule(sc_.handovers[i].time, EventKind::HandoverTrigger, [this, i] { on_trigger(i); });
    }
  }

  // ---- routing ----

  std::size_t channel_for(const PathHop& hop) const { return channel_index_.at({hop.link, hop.from}); }

  void append_fixed(std::vector<std::size_t>& out, const std::string& from, const std::string& to) const {
    auto it = route_cache_.find({from, to});
    if (it == route_cache_.end()) {
      auto p = topo_.fixed_route(from, to);
      if (!p) throw ConfigError("no fixed route from '" + from + "' to '" + to + "'");
      std::vector<std::size_t> r;
      for (const auto& hop : p->hops) r.push_back(channel_for(hop));
      it = route_cache_.emplace(std::make_pair(from, to), std::move(r)).first;
    }
    out.insert(out.end(), it->second.begin(), it->second.end());
  }

  std::size_t downlink(LinkId access) const { return channel_index_.at({access, topo_.gateway_of(access)}); }
  std::size_t uplink(LinkId access) const { return channel_index_.at({access, topo_.mobile_of(access)}); }

  // Home agent -> gateway -> access link -> mobile node.
  std::vector<std::size_t> ha_to_mobile(LinkId access) const {
    std::vector<std::size_t> r;
    append_fixed(r, ha_name_, topo_.gateway_of(access));
    r.push_back(downlink(access));
    return r;
  }

  // Mobile node -> access link -> gateway -> `dest`.
  std::vector<std::size_t> mobile_to(LinkId access, const std::string& dest) const {
    std::vector<std::size_t> r{uplink(access)};
    append_fixed(r, topo_.gateway_of(access), dest);
    return r;
  }

  void send_packet(Packet p) {
    const std::uint64_t id = ++next_packet_;
    packets_.emplace(id, std::move(p));
    forward(id);
  }

  void forward(std::uint64_t id) {
    Packet& p = packets_.at(id);
    if (p.hop == p.route.size()) {
      arrive(id);
      return;
    }
    const std::size_t ci = p.route[p.hop];
    Channel& ch = channels_[ci];
    const TransmitResult r = ch.transmit(p.seg, kernel_.now());
    if (r.dropped()) {
      on_channel_drop(p, ci, r.reason);
      packets_.erase(id);
      return;
    }
    if (p.seg.is(kData)) note_data_enqueue(p, ci);
    ++p.hop;
    kernel_.schedule(*r.arrival, EventKind::PacketArrival, [this, id] { forward(id); });
  }

  void arrive(std::uint64_t id) {
    auto node = packets_.extract(id);
    Packet& p = node.mapped();
    switch (p.role) {
      case PacketRole::DataToHa: data_at_ha(std::move(p)); break;
      case PacketRole::DataToMn: data_at_mobile(p); break;
      case PacketRole::AckToCn: ack_at_cn(p); break;
      case PacketRole::BindingUpdate: bu_at_ha(p); break;
      case PacketRole::BindingAckToOrigin: buack_at_origin(p); break;
      case PacketRole::BindingAckRelay: buack_at_mobile(p.handover); break;
    }
  }

  void on_channel_drop(const Packet& p, std::size_t ci, DropReason reason) {
    const Channel& ch = channels_[ci];
    const char* what = p.seg.is(kData)             ? "data"
                       : p.seg.is(kAck)            ? "ack"
                       : p.seg.is(kBindingUpdate)  ? "bu"
                                                   : "buack";
    auto line = trace_.line(kernel_.now(), "drop", ch.from());
    line.kv("link", ch.spec().name).kv("to", ch.to()).kv("reason", to_string(reason)).kv("type", what);
    if (!p.seg.is(kData) && !p.seg.is(kAck)) return;
    line.kv("flow", p.seg.flow);
    if (p.seg.is(kAck)) {
      line.kv("ack", p.seg.ack);
      return;
    }
    line.kv("seq", p.seg.seq).kv("len", p.seg.payload_len);
    FlowState& f = *flows_.at(p.seg.flow);
    f.dropped += p.seg.payload_len;
    if (auto hi = mobiles_[f.mobile].first_handover) {
      const HandoverRecord& h = handovers_[*hi];
      if (h.triggered) {
        if (h.old_only_channels.contains(ci)) ++f.drops_old;
        else if (h.new_channels.contains(ci)) ++f.drops_new;
      }
    }
  }

  void note_data_enqueue(const Packet& p, std::size_t ci) {
    if (!p.ha_forwarded_at) return;
    FlowState& f = *flows_.at(p.seg.flow);
    auto hi = mobiles_[f.mobile].first_handover;
    if (!hi) return;
    const HandoverRecord& h = handovers_[*hi];
    if (h.t_r1 && *p.ha_forwarded_at >= *h.t_r1 && h.old_only_channels.contains(ci)) ++f.old_enqueues_after_tr1;
  }

  // ---- TCP plumbing ----

  void start_flow(std::size_t fi) {
    FlowState& f = *flows_[fi];
    f.started = kernel_.now();
    trace_.line(kernel_.now(), "flow_start", f.cfg.src).kv("flow", f.id).kv("name", f.cfg.name);
    drive(f, f.sender.start(kernel_.now()));
  }

  void drive(FlowState& f, std::vector<Segment> segs) {
    for (auto& s : segs) {
      s.flow = f.id;
      s.tx_index = ++f.tx_counter;
      f.sent += s.payload_len;
      trace_.line(kernel_.now(), s.retransmission ? "rexmit" : "send", f.cfg.src)
          .kv("flow", f.id)
          .kv("seq", s.seq)
          .kv("len", s.payload_len)
          .kv("tx", s.tx_index);
      Packet p;
      p.seg = s;
      p.role = PacketRole::DataToHa;
      append_fixed(p.route, f.cfg.src, ha_name_);
      send_packet(std::move(p));
    }
    sync_rto(f);
  }

  void sync_rto(FlowState& f) {
    const auto deadline = f.sender.rto_deadline();
    if (deadline == f.rto_at && (f.rto_event.has_value() == deadline.has_value())) return;
    if (f.rto_event) kernel_.cancel(*f.rto_event);
    f.rto_event.reset();
    f.rto_at = deadline;
    if (!deadline) return;
    const std::size_t fi = f.id;
    f.rto_event = kernel_.schedule(std::max(*deadline, kernel_.now()), EventKind::TimerExpiry, [this, fi] {
      FlowState& g = *flows_[fi];
      g.rto_event.reset();
      g.rto_at.reset();
      const auto before = g.sender.rto_count();
      auto segs = g.sender.on_rto(kernel_.now());
      if (g.sender.rto_count() > before) {
        g.rto_times.push_back(kernel_.now());
        trace_.line(kernel_.now(), "rto", g.cfg.src)
            .kv("flow", g.id)
            .kv("una", g.sender.state().snd_una)
            .kv("rto", g.sender.state().rto);
      }
      drive(g, std::move(segs));
    });
  }

  void ack_at_cn(const Packet& p) {
    FlowState& f = *flows_.at(p.seg.flow);
    const auto fast_before = f.sender.fast_retransmits();
    tcp::AckInfo info{p.seg.ack, p.seg.rwnd, p.seg.emission, p.seg.is(kRefresh)};
    auto segs = f.sender.on_ack(info, kernel_.now());
    if (f.sender.fast_retransmits() > fast_before) {
      f.fast_rexmit_times.push_back(kernel_.now());
      trace_.line(kernel_.now(), "fastrexmit", f.cfg.src).kv("flow", f.id).kv("seq", f.sender.state().snd_una);
    }
    for (auto& a : f.adverts) {
      if (a.t_a1 || p.seg.emission < a.emission) continue;
      a.t_a1 = kernel_.now();
      a.marker = f.tx_counter;
      trace_.line(kernel_.now(), "t_a1", f.cfg.src)
          .kv("id", handovers_[a.handover].cfg.id)
          .kv("flow", f.id)
          .kv("rwnd", p.seg.rwnd)
          .kv("last_tx", *a.marker);
      if (*a.marker > 0 && f.last_ha_arrival) {
        a.t_a2 = f.last_ha_arrival;
        trace_.line(kernel_.now(), "t_a2", ha_name_)
            .kv("id", handovers_[a.handover].cfg.id)
            .kv("flow", f.id)
            .kv("at", *a.t_a2);
      }
    }
    const auto& st = f.sender.state();
    trace_.line(kernel_.now(), "ack", f.cfg.src)
        .kv("flow", f.id)
        .kv("ack", p.seg.ack)
        .kv("rwnd", p.seg.rwnd)
        .kv("em", p.seg.emission)
        .kv("cwnd", st.cwnd)
        .kv("ssthresh", st.ssthresh)
        .kv("una", st.snd_una)
        .kv("nxt", st.snd_nxt)
        .kv("phase", tcp::to_string(st.phase));
    if (ack_observer_) ack_observer_(f.id, kernel_.now(), st);
    drive(f, std::move(segs));
  }

  void data_at_ha(Packet p) {
    FlowState& f = *flows_.at(p.seg.flow);
    const std::string& mn = mobiles_[f.mobile].name;
    auto b = ha_.route(mn, p.seg);
    if (!b) {
      f.dropped += p.seg.payload_len;
      trace_.line(kernel_.now(), "drop", ha_name_)
          .kv("reason", "NO_BINDING")
          .kv("type", "data")
          .kv("flow", f.id)
          .kv("seq", p.seg.seq)
          .kv("len", p.seg.payload_len);
      return;
    }
    f.last_ha_arrival = kernel_.now();
    for (auto& a : f.adverts) {
      if (!a.marker || p.seg.tx_index > *a.marker) continue;
      a.t_a2 = kernel_.now();
      trace_.line(kernel_.now(), "t_a2", ha_name_)
          .kv("id", handovers_[a.handover].cfg.id)
          .kv("flow", f.id)
          .kv("tx", p.seg.tx_index);
    }
    p.role = PacketRole::DataToMn;
    p.route = ha_to_mobile(b->attachment);
    p.hop = 0;
    p.ha_forwarded_at = kernel_.now();
    p.seg.path_tag = b->attachment;
    send_packet(std::move(p));
  }

  void data_at_mobile(const Packet& p) {
    FlowState& f = *flows_.at(p.seg.flow);
    const auto out = f.receiver.on_segment(p.seg, kernel_.now());
    if (out.dropped) {
      f.dropped += p.seg.payload_len;
      trace_.line(kernel_.now(), "drop", mobiles_[f.mobile].name)
          .kv("reason", "RCVBUF")
          .kv("type", "data")
          .kv("flow", f.id)
          .kv("seq", p.seg.seq);
      return;
    }
    f.delivered += p.seg.payload_len;
    if (out.spurious) {
      ++f.spurious;
      trace_.line(kernel_.now(), "spurious", mobiles_[f.mobile].name)
          .kv("flow", f.id)
          .kv("seq", p.seg.seq)
          .kv("len", p.seg.payload_len);
    }
    if (out.delivered_in_order > 0) note_delivery(f);
    if (out.ack) emit_ack(f, *out.ack);
    check_drain(f);
  }

  void note_delivery(FlowState& f) {
    const SimTime now = kernel_.now();
    if (auto hi = mobiles_[f.mobile].first_handover) {
      const HandoverRecord& h = handovers_[*hi];
      if (now >= h.cfg.time && now <= gap_window_end(f, h)) {
        const SimTime from = std::max({h.cfg.time, f.started.value_or(h.cfg.time), f.last_delivery.value_or(h.cfg.time)});
        f.longest_gap = std::max(f.longest_gap, now - from);
      }
    }
    f.last_delivery = now;
    if (f.cfg.volume && !f.completed && f.receiver.state().rcv_nxt >= *f.cfg.volume) {
      f.completed = now;
      trace_.line(now, "flow_done", mobiles_[f.mobile].name).kv("flow", f.id);
    }
  }

  SimTime gap_window_end(const FlowState& f, const HandoverRecord& h) const {
    SimTime end = std::min(h.cfg.time + kGapHorizon, sc_.sim.end);
    for (const auto& other : handovers_)
      if (other.mobile == h.mobile && other.cfg.time > h.cfg.time) end = std::min(end, other.cfg.time);
    if (f.completed) end = std::min(end, *f.completed);
    return end;
  }

  std::optional<SimTime> handover_gap(const FlowState& f, const HandoverRecord& h) const {
    if (!h.triggered || !f.started) return std::nullopt;
    const SimTime end = std::min(gap_window_end(f, h), kernel_.now());
    if (end < h.cfg.time) return std::nullopt;
    const SimTime from = std::max({h.cfg.time, *f.started, f.last_delivery.value_or(h.cfg.time)});
    return std::max(f.longest_gap, end > from ? end - from : SimTime::zero());
  }

  void emit_ack(FlowState& f, Segment ack) {
    const std::int64_t inc = ack.rwnd - f.last_rwnd;
    f.max_rwnd_increase = std::max(f.max_rwnd_increase, inc);
    f.last_rwnd = ack.rwnd;
    if (f.stage != ShapingStage::None) {
      const std::int64_t cap = f.receiver.state().adv_policy_cap.value_or(f.receiver.state().buffer_capacity);
      if (f.stage != ShapingStage::Drain && cap - f.last_cap > 2 * sc_.sim.mss)
        throw InvariantViolation("window step above 2*mss while shaping flow " + f.cfg.name);
      f.last_cap = cap;
      if (f.stage == ShapingStage::Ramp && !f.receiver.ramp_active()) {
        f.stage = ShapingStage::None;
        trace_.line(kernel_.now(), "ramp_done", mobiles_[f.mobile].name).kv("flow", f.id).kv("cap", cap);
      }
    }
    trace_.line(kernel_.now(), "ackout", mobiles_[f.mobile].name)
        .kv("flow", f.id)
        .kv("ack", ack.ack)
        .kv("rwnd", ack.rwnd)
        .kv("em", ack.emission)
        .kv("refresh", ack.is(kRefresh));
    const SimTime delay = f.receiver.state().ack_delay;
    const std::size_t fi = f.id;
    if (delay > SimTime::zero())
      kernel_.schedule_in(delay, EventKind::AppSend, [this, fi, ack] { send_ack(*flows_[fi], ack); });
    else
      send_ack(f, ack);
  }

  void send_ack(FlowState& f, Segment ack) {
    const MobileState& m = mobiles_[f.mobile];
    ack.path_tag = m.attachment;
    ack.sent_at = kernel_.now();
    Packet p;
    p.seg = ack;
    p.role = PacketRole::AckToCn;
    p.route = mobile_to(m.attachment, f.cfg.src);
    send_packet(std::move(p));
  }

  // ---- handovers ----

  void store_estimate(MobileState& m, LinkId access, SimTime now) {
    const std::string& cn = m.default_cn.empty() ? ha_name_ : m.default_cn;
    auto path = topo_.access_route(access, cn);
    if (!path) return;
    const SimTime rtt = path->one_way_delay() * 2;
    if (rtt <= SimTime::zero()) return;
    m.cache.store(topo_.link(access).spec.kind, path->bottleneck_bandwidth(), rtt, now);
  }

  std::vector<handover::FlowDemand> demands(const MobileState& m, bool with_min_share) const {
    std::vector<handover::FlowDemand> d;
    for (std::size_t fi : m.flows) {
      const auto& f = *flows_[fi];
      d.push_back({f.id, f.cfg.weight, with_min_share ? f.cfg.min_share : 0});
    }
    return d;
  }

  void on_trigger(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    MobileState& m = mobiles_[h.mobile];
    h.triggered = true;
    h.old_link = m.attachment;
    h.new_link = *topo_.find_link(h.cfg.target);
    trace_.line(kernel_.now(), "handover_detect", m.name)
        .kv("id", h.cfg.id)
        .kv("direction", handover::to_string(h.cfg.direction))
        .kv("from", topo_.link(h.old_link).spec.name)
        .kv("to", h.cfg.target);
    if (h.cfg.direction == handover::Direction::IntraSat) {
      trace_.line(kernel_.now(), "l2_handover", m.name).kv("id", h.cfg.id).kv("link", h.cfg.target);
      return;
    }
    if (h.old_link == h.new_link) {
      h.aborted = true;
      trace_.line(kernel_.now(), "abort", m.name).kv("id", h.cfg.id).kv("reason", "already_attached");
      return;
    }
    const auto old_path = ha_to_mobile(h.old_link);
    const auto new_path = ha_to_mobile(h.new_link);
    h.new_channels.insert(new_path.begin(), new_path.end());
    for (std::size_t c : old_path)
      if (!h.new_channels.contains(c)) h.old_only_channels.insert(c);

    if (mode_ == Mode::Proactive && h.cfg.direction == handover::Direction::TerrToSat) {
      proactive_terr_to_sat(hi);
    } else if (mode_ == Mode::Proactive && h.cfg.direction == handover::Direction::SatToTerr) {
      proactive_sat_to_terr_detect(hi);
    } else {
      kernel_.schedule(h.cfg.execute_time(), EventKind::HandoverTrigger, [this, hi] { execute_switch(hi); });
    }
  }

  RttTable rtt_for(const MobileState& m, LinkId sat, LinkId terr) const {
    return rtt_table(topo_, HandoverRoles{m.name, m.default_cn, ha_name_, topo_.link(sat).spec.name,
                                          topo_.link(terr).spec.name});
  }

  void proactive_terr_to_sat(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    const RttTable rtt = rtt_for(m, h.new_link, h.old_link);
    try {
      h.plan = handover::plan_terr_to_sat(m.cache, sc_.sim.w_default, sc_.sim.sat_default_window, rtt, now,
                                          topo_.link(h.new_link).spec);
    } catch (const handover::HandoverAbort&) {
      h.aborted = true;
      trace_.line(now, "abort", m.name).kv("id", h.cfg.id).kv("reason", "sat_unavailable");
      return;
    }
    h.t_a0 = now;
    trace_.line(now, "t_a0", m.name)
        .kv("id", h.cfg.id)
        .kv("w_rec", h.plan->w_rec)
        .kv("delta", h.plan->delta)
        .kv("chain_violation", h.plan->chain_violation);
    const auto shares = handover::allocate_flow_windows(demands(m, true), h.plan->w_rec);
    for (std::size_t fi : m.flows) {
      FlowState& f = *flows_[fi];
      const std::int64_t cap = std::min(shares.at(f.id), f.receiver.state().buffer_capacity);
      auto ack = f.receiver.set_window_policy(cap);
      f.adverts.push_back({hi, ack ? ack->emission : f.receiver.acks_emitted() + 1, {}, {}, {}});
      trace_.line(now, "window_policy", m.name).kv("flow", f.id).kv("cap", cap);
      if (ack) emit_ack(f, *ack);
      if (h.cfg.ack_pacing > SimTime::zero()) handover::set_ack_pacing(f.receiver, h.cfg.ack_pacing);
    }
    kernel_.schedule(h.plan->t_r0, EventKind::HandoverTrigger, [this, hi] { execute_switch(hi); });
  }

  void proactive_sat_to_terr_detect(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    const RttTable rtt = rtt_for(m, h.old_link, h.new_link);
    std::int64_t current = 0;
    for (std::size_t fi : m.flows) current += flows_[fi]->receiver.advertised_window();
    h.plan = handover::plan_sat_to_terr(m.cache, topo_.link(h.new_link).spec.kind, current, sc_.sim.mss,
                                        sc_.sim.receive_buffer(), sc_.sim.sat_default_window, rtt, now);
    h.t_a0 = now;
    const std::int64_t sat_bdp = h.plan->boost_target - current;
    trace_.line(now, "t_a0", m.name)
        .kv("id", h.cfg.id)
        .kv("boost_target", h.plan->boost_target)
        .kv("ramp_target", h.plan->ramp_target)
        .kv("drain_timeout", h.plan->drain_timeout);
    if (!m.flows.empty()) {
      const auto boost = handover::allocate_flow_windows(demands(m, false), std::max<std::int64_t>(0, sat_bdp));
      const auto ramp = handover::allocate_flow_windows(demands(m, false), h.plan->ramp_target);
      for (std::size_t fi : m.flows) {
        FlowState& f = *flows_[fi];
        const std::int64_t buffer = f.receiver.state().buffer_capacity;
        const std::int64_t cur = f.receiver.advertised_window();
        const std::int64_t target = std::min(buffer, cur + boost.at(f.id));
        f.ramp_target = std::min(buffer, std::max(ramp.at(f.id), 2 * sc_.sim.mss));
        f.stage = ShapingStage::Boost;
        f.stage_handover = hi;
        f.receiver.start_ramp(target, h.plan->boost_step);
        f.last_cap = *f.receiver.state().adv_policy_cap;
        trace_.line(now, "boost_start", m.name).kv("flow", f.id).kv("from", f.last_cap).kv("target", target);
        if (h.cfg.ack_pacing > SimTime::zero()) handover::set_ack_pacing(f.receiver, h.cfg.ack_pacing);
      }
    }
    kernel_.schedule(h.cfg.execute_time(), EventKind::HandoverTrigger, [this, hi] { execute_sat_to_terr(hi); });
  }

  void execute_sat_to_terr(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    if (!topo_.link(h.new_link).spec.available_at(now)) {
      h.aborted = true;
      trace_.line(now, "abort", m.name).kv("id", h.cfg.id).kv("reason", "terrestrial_unavailable");
      for (std::size_t fi : m.flows) {
        FlowState& f = *flows_[fi];
        f.receiver.stop_ramp();
        f.stage = ShapingStage::None;
      }
      return;
    }
    switch_attachment(h);
    for (std::size_t fi : m.flows) {
      FlowState& f = *flows_[fi];
      f.stage = ShapingStage::Drain;
      f.stage_handover = hi;
      auto ack = f.receiver.set_window_policy(0);
      f.receiver.set_suppress_dupacks(true);
      f.sender.external_congestion_avoidance();
      trace_.line(now, "drain_start", m.name).kv("flow", f.id);
      trace_.line(now, "cong_avoid", f.cfg.src)
          .kv("flow", f.id)
          .kv("cwnd", f.sender.state().cwnd)
          .kv("ssthresh", f.sender.state().ssthresh);
      if (ack) emit_ack(f, *ack);
      const SimTime timeout = h.plan ? h.plan->drain_timeout : SimTime::zero();
      f.drain_timer = kernel_.schedule_in(timeout, EventKind::TimerExpiry, [this, fi] {
        FlowState& g = *flows_[fi];
        g.drain_timer.reset();
        if (g.stage == ShapingStage::Drain) finish_drain(g, true);
      });
    }
    send_bu(hi);
  }

  void check_drain(FlowState& f) {
    if (f.stage != ShapingStage::Drain) return;
    const HandoverRecord& h = handovers_[f.stage_handover];
    if (!h.buack_at_mn || !h.binding_ack) return;
    const auto& hw = h.binding_ack->previous_high_water;
    auto it = hw.find(f.id);
    const std::int64_t target = it == hw.end() ? 0 : it->second;
    if (f.receiver.state().rcv_nxt >= target) finish_drain(f, false);
  }

  void finish_drain(FlowState& f, bool timed_out) {
    if (f.drain_timer) kernel_.cancel(*f.drain_timer);
    f.drain_timer.reset();
    trace_.line(kernel_.now(), timed_out ? "drain_timeout" : "drain_done", mobiles_[f.mobile].name)
        .kv("flow", f.id)
        .kv("rcv_nxt", f.receiver.state().rcv_nxt);
    f.receiver.set_suppress_dupacks(false);
    f.stage = ShapingStage::Ramp;
    f.last_cap = f.receiver.state().adv_policy_cap.value_or(0);
    trace_.line(kernel_.now(), "ramp_start", mobiles_[f.mobile].name).kv("flow", f.id).kv("target", f.ramp_target);
    emit_ack(f, f.receiver.start_ramp_now(f.ramp_target, 2 * sc_.sim.mss));
  }

  void execute_switch(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    if (!topo_.link(h.new_link).spec.available_at(now)) {
      h.aborted = true;
      trace_.line(now, "abort", m.name).kv("id", h.cfg.id).kv("reason", "target_unavailable");
      return;
    }
    switch_attachment(h);
    if (mode_ == Mode::ResetCwnd) {
      for (std::size_t fi : m.flows) {
        FlowState& f = *flows_[fi];
        auto path = topo_.access_route(h.new_link, f.cfg.src);
        if (!path) continue;
        const std::int64_t bdp = handover::estimate_bdp(path->bottleneck_bandwidth(), path->one_way_delay() * 2);
        f.sender.reset_for_new_path(bdp);
        trace_.line(now, "reset_cwnd", f.cfg.src).kv("flow", f.id).kv("ssthresh", f.sender.state().ssthresh);
      }
    }
    send_bu(hi);
  }

  void switch_attachment(HandoverRecord& h) {
    MobileState& m = mobiles_[h.mobile];
    store_estimate(m, m.attachment, kernel_.now());
    m.attachment = h.new_link;
    h.t_r0 = kernel_.now();
    trace_.line(kernel_.now(), "t_r0", m.name).kv("id", h.cfg.id).kv("attach", h.cfg.target);
  }

  std::string bu_origin(const HandoverRecord& h) const {
    return h.registration.origin == RegistrationOrigin::Proxy ? h.registration.proxy_location
                                                              : mobiles_[h.mobile].name;
  }

  void send_bu(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    const MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    const std::string origin = bu_origin(h);
    Packet p;
    p.role = PacketRole::BindingUpdate;
    p.handover = hi;
    p.seg.flags = kBindingUpdate;
    p.seg.sent_at = now;
    if (h.registration.origin == RegistrationOrigin::Mn) {
      const LinkSpec& spec = topo_.link(h.new_link).spec;
      if (!spec.available_at(now)) {
        auto next = spec.next_available(now);
        trace_.line(now, "bu_deferred", origin).kv("id", h.cfg.id);
        if (next) kernel_.schedule(*next, EventKind::Control, [this, hi] { send_bu(hi); });
        return;
      }
      p.route = mobile_to(h.new_link, ha_name_);
    } else {
      append_fixed(p.route, origin, ha_name_);
    }
    ++h.bu_attempts;
    trace_.line(now, h.bu_attempts == 1 ? "bu" : "bu_retry", origin)
        .kv("id", h.cfg.id)
        .kv("mn", m.name)
        .kv("attach", h.cfg.target);
    send_packet(std::move(p));
    if (h.bu_attempts < kMaxBindingAttempts)
      kernel_.schedule_in(kBindingRetryInterval, EventKind::TimerExpiry, [this, hi] {
        if (!handovers_[hi].t_r3) send_bu(hi);
      });
  }

  void bu_at_ha(const Packet& p) {
    HandoverRecord& h = handovers_[p.handover];
    const MobileState& m = mobiles_[h.mobile];
    const SimTime now = kernel_.now();
    if (!h.binding_ack) {
      BindingUpdate bu{m.name, h.new_link, bu_origin(h), p.handover};
      h.binding_ack = ha_.on_binding_update(topo_, bu, now);
      h.t_r1 = now;
      trace_.line(now, "t_r1", ha_name_).kv("id", h.cfg.id).kv("mn", m.name).kv("attach", h.cfg.target);
    }
    Packet a;
    a.role = PacketRole::BindingAckToOrigin;
    a.handover = p.handover;
    a.seg.flags = kBindingAck;
    a.seg.sent_at = now;
    if (h.registration.origin == RegistrationOrigin::Mn) a.route = ha_to_mobile(h.new_link);
    else append_fixed(a.route, ha_name_, h.registration.proxy_location);
    send_packet(std::move(a));
  }

  void buack_at_origin(const Packet& p) {
    HandoverRecord& h = handovers_[p.handover];
    const SimTime now = kernel_.now();
    const std::string origin = bu_origin(h);
    if (h.t_r3) return;
    h.t_r3 = now;
    trace_.line(now, "t_r3", origin).kv("id", h.cfg.id);
    if (h.cfg.ack_pacing > SimTime::zero())
      for (std::size_t fi : mobiles_[h.mobile].flows) flows_[fi]->receiver.set_ack_delay(SimTime::zero());
    if (h.registration.origin == RegistrationOrigin::Mn) {
      buack_at_mobile(p.handover);
      return;
    }
    // The proxy tells the mobile node over its new access link.
    Packet r;
    r.role = PacketRole::BindingAckRelay;
    r.handover = p.handover;
    r.seg.flags = kBindingAck;
    r.seg.sent_at = now;
    append_fixed(r.route, origin, topo_.gateway_of(h.new_link));
    r.route.push_back(downlink(h.new_link));
    send_packet(std::move(r));
  }

  void buack_at_mobile(std::size_t hi) {
    HandoverRecord& h = handovers_[hi];
    if (h.buack_at_mn) return;
    h.buack_at_mn = true;
    trace_.line(kernel_.now(), "buack", mobiles_[h.mobile].name).kv("id", h.cfg.id);
    for (std::size_t fi : mobiles_[h.mobile].flows) check_drain(*flows_[fi]);
  }

  Scenario sc_;
  Mode mode_;
  std::uint64_t seed_;
  Kernel kernel_;
  Trace trace_;
  Topology topo_;
  std::string ha_name_;
  HomeAgent ha_;
  std::vector<Channel> channels_;
  std::map<std::pair<LinkId, std::string>, std::size_t> channel_index_;
  mutable std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> route_cache_;
  std::vector<MobileState> mobiles_;
  std::map<std::string, std::size_t> mobile_index_;
  std::vector<std::unique_ptr<FlowState>> flows_;
  std::vector<HandoverRecord> handovers_;
  std::map<std::uint64_t, Packet> packets_;
  std::uint64_t next_packet_ = 0;
  AckObserver ack_observer_;
};

/// Runs one scenario to completion.
inline RunMetrics run_scenario(const Scenario& sc, Mode mode, std::uint64_t seed, std::ostream* trace = nullptr) {
  Simulation sim(sc, mode, seed, trace);
  return sim.run();
}

}  // namespace vhsim
