#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "vhsim/errors.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim::tcp {

/// Cap on the advertised window; nullopt means UNLIMITED (buffer-bound only).
using WindowCap = std::optional<std::int64_t>;
inline constexpr WindowCap kUnlimited = std::nullopt;

inline constexpr SimTime kRefreshInterval = SimTime::from_ms(100);

struct TcpReceiverState {
  std::int64_t rcv_nxt = 0;
  std::int64_t buffer_capacity = 0;
  // seq -> end of each buffered out-of-order range, disjoint and non-adjacent
  std::map<std::int64_t, std::int64_t> out_of_order;
  WindowCap adv_policy_cap = kUnlimited;
  bool suppress_dupacks = false;
  SimTime ack_delay{};

  std::int64_t buffered_bytes() const {
    std::int64_t n = 0;
    for (const auto& [s, e] : out_of_order) n += e - s;
    return n;
  }
};

struct ReceiveOutcome {
  std::optional<Segment> ack;
  bool dropped = false;
  // Retransmitted range that was already held below rcv_nxt or in the buffer.
  bool spurious = false;
  std::int64_t delivered_in_order = 0;
};

/// Receiving endpoint. The application drains in-order data immediately, so
/// only out-of-order ranges occupy the buffer.
class TcpReceiver {
 public:
  TcpReceiver(FlowId flow, std::int64_t buffer_capacity, WindowCap initial_cap = kUnlimited) : flow_(flow) {
    if (buffer_capacity <= 0) throw ConfigError("receive buffer must be positive");
    st_.buffer_capacity = buffer_capacity;
    check_cap(initial_cap);
    st_.adv_policy_cap = initial_cap;
  }

  const TcpReceiverState& state() const { return st_; }
  FlowId flow() const { return flow_; }

  /// min(free buffer, policy cap), as it would be advertised right now.
  std::int64_t advertised_window() const {
    const std::int64_t free = st_.buffer_capacity - st_.buffered_bytes();
    return st_.adv_policy_cap ? std::min(free, *st_.adv_policy_cap) : free;
  }

  bool ramp_active() const { return ramp_.has_value(); }

  ReceiveOutcome on_segment(const Segment& s, SimTime now) {
    ensure(s.is(kData), "receiver fed a non-DATA segment");
    ReceiveOutcome out;
    if (s.end() > st_.rcv_nxt + st_.buffer_capacity) {
      out.dropped = true;
      return out;
    }
    out.spurious = s.retransmission && already_held(s.seq, s.end());

    if (s.seq <= st_.rcv_nxt && s.end() > st_.rcv_nxt) {
      const std::int64_t before = st_.rcv_nxt;
      st_.rcv_nxt = s.end();
      absorb_buffered();
      out.delivered_in_order = st_.rcv_nxt - before;
      out.ack = make_ack(0);
      return out;
    }

    if (s.seq > st_.rcv_nxt) insert_range(s.seq, s.end());
    // Out-of-order or wholly duplicate arrival.
    if (!st_.suppress_dupacks) {
      out.ack = make_ack(0);
    } else if (!last_refresh_ || now - *last_refresh_ >= kRefreshInterval) {
      last_refresh_ = now;
      out.ack = make_ack(kRefresh);
    }
    return out;
  }

  /// Caps every subsequent advertisement at `cap`. Returns the immediate
  /// window-update ACK when the cap actually changed.
  std::optional<Segment> set_window_policy(WindowCap cap) {
    check_cap(cap);
    ramp_.reset();
    if (cap == st_.adv_policy_cap) return std::nullopt;
    st_.adv_policy_cap = cap;
    return make_ack(0);
  }

  /// Raise the cap toward `target` by at most `step` on every emitted ACK.
  /// An unlimited cap is first pinned to the current advertisement.
  void start_ramp(std::int64_t target, std::int64_t step) {
    check_cap(target);
    if (step <= 0) throw ConfigError("ramp step must be positive");
    if (!st_.adv_policy_cap) st_.adv_policy_cap = advertised_window();
    ramp_ = Ramp{target, step};
  }

  /// start_ramp() plus an immediate window-update ACK carrying the first step.
  Segment start_ramp_now(std::int64_t target, std::int64_t step) {
    start_ramp(target, step);
    return make_ack(0);
  }

  void stop_ramp() { ramp_.reset(); }

  void set_suppress_dupacks(bool on) {
    st_.suppress_dupacks = on;
    if (!on) last_refresh_.reset();
  }

  void set_ack_delay(SimTime d) {
    if (d < SimTime::zero()) throw ConfigError("ACK delay must be non-negative");
    st_.ack_delay = d;
  }

  std::uint64_t acks_emitted() const { return acks_emitted_; }

 private:
  struct Ramp {
    std::int64_t target;
    std::int64_t step;
  };

  void check_cap(WindowCap cap) const {
    if (cap && (*cap < 0 || *cap > st_.buffer_capacity))
      throw ConfigError("window cap " + std::to_string(*cap) + " exceeds receive buffer " +
                        std::to_string(st_.buffer_capacity));
  }

  bool already_held(std::int64_t seq, std::int64_t end) const {
    const std::int64_t lo = std::max(seq, st_.rcv_nxt);
    if (end <= lo) return true;
    auto it = st_.out_of_order.upper_bound(lo);
    if (it == st_.out_of_order.begin()) return false;
    --it;
    return it->first <= lo && it->second >= end;
  }

  void insert_range(std::int64_t seq, std::int64_t end) {
    auto& m = st_.out_of_order;
    auto it = m.upper_bound(seq);
    if (it != m.begin()) {
      auto prev = std::prev(it);
      if (prev->second >= seq) {
        seq = prev->first;
        end = std::max(end, prev->second);
        it = m.erase(prev);
      }
    }
    while (it != m.end() && it->first <= end) {
      end = std::max(end, it->second);
      it = m.erase(it);
    }
    m.emplace(seq, end);
  }

  void absorb_buffered() {
    auto& m = st_.out_of_order;
    while (!m.empty() && m.begin()->first <= st_.rcv_nxt) {
      st_.rcv_nxt = std::max(st_.rcv_nxt, m.begin()->second);
      m.erase(m.begin());
    }
  }

  Segment make_ack(std::uint8_t extra_flags) {
    if (ramp_) {
      const std::int64_t cur = st_.adv_policy_cap.value_or(0);
      st_.adv_policy_cap = std::min(cur + ramp_->step, std::max(cur, ramp_->target));
      if (*st_.adv_policy_cap >= ramp_->target) ramp_.reset();
    }
    Segment a;
    a.flow = flow_;
    a.ack = st_.rcv_nxt;
    a.rwnd = advertised_window();
    a.flags = static_cast<std::uint8_t>(kAck | extra_flags);
    a.emission = ++acks_emitted_;
    ensure(a.ack >= last_ack_, "cumulative ACK went backwards");
    ensure(a.rwnd <= st_.buffer_capacity, "advertised window exceeds receive buffer");
    last_ack_ = a.ack;
    return a;
  }

  FlowId flow_;
  TcpReceiverState st_;
  std::optional<Ramp> ramp_;
  std::optional<SimTime> last_refresh_;
  std::uint64_t acks_emitted_ = 0;
  std::int64_t last_ack_ = 0;
};

}  // namespace vhsim::tcp
