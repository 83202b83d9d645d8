#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim::tcp {

struct TcpConfig {
  std::int64_t mss = 1460;
  std::int64_t initial_window = 2 * 1460;
  std::int64_t initial_ssthresh = 65536;
  SimTime initial_rto = SimTime::from_seconds(1);
  SimTime min_rto = SimTime::from_seconds(1);
  SimTime max_rto = SimTime::from_seconds(60);
};

enum class Phase : std::uint8_t { SlowStart, CongestionAvoidance, FastRecovery };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::SlowStart: return "SS";
    case Phase::CongestionAvoidance: return "CA";
    case Phase::FastRecovery: return "FR";
  }
  return "?";
}

struct TcpSenderState {
  std::int64_t cwnd = 0;
  std::int64_t ssthresh = 0;
  std::int64_t snd_una = 0;
  std::int64_t snd_nxt = 0;
  // Highest byte ever sent. snd_nxt falls below it after a timeout (go-back-N).
  std::int64_t snd_max = 0;
  std::int64_t peer_rwnd = 0;
  int dupack_count = 0;
  std::optional<SimTime> srtt;
  SimTime rttvar{};
  SimTime rto{};
  std::int64_t mss = 0;
  Phase phase = Phase::SlowStart;
  std::int64_t recover = 0;
  // seq -> number of times retransmitted
  std::map<std::int64_t, int> retransmit_log;

  std::int64_t flight() const { return snd_nxt - snd_una; }
};

/// What the sender learned from one ACK segment.
struct AckInfo {
  std::int64_t ack = 0;
  std::int64_t rwnd = 0;
  std::uint64_t emission = 0;
  bool refresh = false;
};

/// Reno sender for a pre-established bulk flow.
///
/// Window updates follow the RFC 793 rule with the receiver's emission
/// counter standing in for SEG.SEQ: an advertisement overtaken by a newer
/// one (different return paths during a handover) never reopens the window.
class TcpSender {
 public:
  TcpSender(TcpConfig cfg, std::optional<std::int64_t> volume, std::int64_t initial_peer_rwnd)
      : cfg_(cfg), volume_(volume) {
    if (cfg_.mss <= 0) throw ConfigError("mss must be positive");
    st_.mss = cfg_.mss;
    st_.cwnd = std::max(cfg_.initial_window, cfg_.mss);
    st_.ssthresh = std::max(cfg_.initial_ssthresh, 2 * cfg_.mss);
    st_.peer_rwnd = initial_peer_rwnd;
    st_.rto = cfg_.initial_rto;
    update_phase();
  }

  const TcpSenderState& state() const { return st_; }
  const TcpConfig& config() const { return cfg_; }
  std::optional<SimTime> rto_deadline() const { return rto_deadline_; }
  bool finished() const { return volume_ && st_.snd_una >= *volume_; }

  std::uint64_t retransmits() const { return retransmits_; }
  std::uint64_t fast_retransmits() const { return fast_retransmits_; }
  std::uint64_t rto_count() const { return rto_count_; }

  std::vector<Segment> start(SimTime now) { return send_available(now); }

  std::vector<Segment> on_ack(const AckInfo& a, SimTime now) {
    if (a.ack > st_.snd_max)
      throw InvariantViolation("ACK " + std::to_string(a.ack) + " beyond snd_max " + std::to_string(st_.snd_max));

    const bool fresh = a.emission >= last_window_emission_;
    const bool window_changed = fresh && a.rwnd != st_.peer_rwnd;
    if (fresh) {
      st_.peer_rwnd = a.rwnd;
      last_window_emission_ = a.emission;
    }

    std::vector<Segment> out;
    if (a.ack > st_.snd_una) {
      sample_rtt(a.ack, now);
      const std::int64_t acked = a.ack - st_.snd_una;
      if (st_.phase == Phase::FastRecovery) {
        // Reno: any new ACK ends recovery and deflates the window.
        st_.cwnd = st_.ssthresh;
        st_.phase = Phase::CongestionAvoidance;
      } else if (st_.cwnd < st_.ssthresh) {
        st_.cwnd += std::min(acked, st_.mss);
      } else {
        st_.cwnd += std::max<std::int64_t>(1, st_.mss * st_.mss / st_.cwnd);
      }
      st_.snd_una = a.ack;
      st_.snd_nxt = std::max(st_.snd_nxt, st_.snd_una);
      st_.dupack_count = 0;
      for (auto it = st_.retransmit_log.begin(); it != st_.retransmit_log.end() && it->first < st_.snd_una;)
        it = st_.retransmit_log.erase(it);
      if (st_.phase != Phase::FastRecovery) update_phase();
      if (st_.snd_una < st_.snd_max) rto_deadline_ = now + st_.rto;
      else rto_deadline_.reset();
    } else if (a.ack == st_.snd_una && st_.snd_max > st_.snd_una && !window_changed && !a.refresh && fresh &&
               st_.peer_rwnd > 0) {
      ++st_.dupack_count;
      if (st_.phase == Phase::FastRecovery) {
        st_.cwnd += st_.mss;
      } else if (st_.dupack_count == 3) {
        st_.ssthresh = std::max(st_.flight() / 2, 2 * st_.mss);
        st_.recover = st_.snd_max;
        out.push_back(retransmit_head(now));
        st_.cwnd = st_.ssthresh + 3 * st_.mss;
        st_.phase = Phase::FastRecovery;
        ++fast_retransmits_;
      }
    }
    auto more = send_available(now);
    out.insert(out.end(), more.begin(), more.end());
    return out;
  }

  std::vector<Segment> on_rto(SimTime now) {
    if (st_.snd_una >= st_.snd_max) {
      rto_deadline_.reset();
      return {};
    }
    st_.rto = std::min(st_.rto * 2, cfg_.max_rto);
    rto_deadline_ = now + st_.rto;
    if (st_.peer_rwnd == 0) return {};  // no window probes: hold until the receiver reopens
    ++rto_count_;
    st_.ssthresh = std::max(st_.flight() / 2, 2 * st_.mss);
    st_.cwnd = st_.mss;
    st_.phase = Phase::SlowStart;
    st_.dupack_count = 0;
    st_.snd_nxt = st_.snd_una;
    std::vector<Segment> out;
    out.push_back(retransmit_head(now));
    st_.snd_nxt = std::max(st_.snd_nxt, out.back().end());
    return out;
  }

  /// Enter congestion avoidance at half the current window. Driven externally
  /// by the handover engine instead of by loss.
  void external_congestion_avoidance() {
    st_.ssthresh = std::max(st_.cwnd / 2, 2 * st_.mss);
    st_.cwnd = st_.ssthresh;
    st_.phase = Phase::CongestionAvoidance;
    st_.dupack_count = 0;
  }

  /// Restart from one segment with ssthresh seeded from the new path.
  void reset_for_new_path(std::int64_t ssthresh) {
    st_.ssthresh = std::max(ssthresh, 2 * st_.mss);
    st_.cwnd = st_.mss;
    st_.phase = Phase::SlowStart;
    st_.dupack_count = 0;
  }

 private:
  void update_phase() {
    st_.phase = st_.cwnd < st_.ssthresh ? Phase::SlowStart : Phase::CongestionAvoidance;
  }

  std::int64_t data_end() const { return volume_ ? *volume_ : std::numeric_limits<std::int64_t>::max(); }

  Segment make_segment(std::int64_t seq, std::int64_t len, SimTime now) const {
    Segment s;
    s.seq = seq;
    s.payload_len = len;
    s.flags = kData;
    s.sent_at = now;
    s.retransmission = seq < st_.snd_max;
    return s;
  }

  Segment retransmit_head(SimTime now) {
    const std::int64_t len = std::min(st_.mss, st_.snd_max - st_.snd_una);
    ensure(len > 0, "retransmission with nothing outstanding");
    ensure(st_.peer_rwnd > 0, "data sent into a zero window");
    Segment s = make_segment(st_.snd_una, len, now);
    note_retransmission(s.seq);
    return s;
  }

  void note_retransmission(std::int64_t seq) {
    ++retransmits_;
    ++st_.retransmit_log[seq];
    timing_.reset();  // Karn
  }

  std::vector<Segment> send_available(SimTime now) {
    std::vector<Segment> out;
    if (st_.peer_rwnd <= 0) return out;
    const std::int64_t wnd = std::min(st_.cwnd, st_.peer_rwnd);
    bool sent_new = false;
    while (true) {
      const std::int64_t len = std::min(st_.mss, data_end() - st_.snd_nxt);
      if (len <= 0) break;
      if (st_.snd_nxt + len > st_.snd_una + wnd) break;
      Segment s = make_segment(st_.snd_nxt, len, now);
      if (s.retransmission) note_retransmission(s.seq);
      else if (!timing_) timing_ = Timing{s.end(), now};
      st_.snd_nxt += len;
      st_.snd_max = std::max(st_.snd_max, st_.snd_nxt);
      out.push_back(s);
      sent_new = true;
    }
    if (sent_new)
      ensure(st_.flight() <= std::min(st_.cwnd, st_.peer_rwnd) + st_.mss, "flight exceeds min(cwnd, rwnd) + mss");
    if (!rto_deadline_ && st_.snd_una < st_.snd_max) rto_deadline_ = now + st_.rto;
    return out;
  }

  void sample_rtt(std::int64_t ack, SimTime now) {
    if (!timing_ || ack < timing_->seq_end) return;
    const SimTime r = now - timing_->sent_at;
    timing_.reset();
    if (!st_.srtt) {
      st_.srtt = r;
      st_.rttvar = r / 2;
    } else {
      const SimTime diff = *st_.srtt > r ? *st_.srtt - r : r - *st_.srtt;
      st_.rttvar = (st_.rttvar * 3 + diff) / 4;
      st_.srtt = (*st_.srtt * 7 + r) / 8;
    }
    st_.rto = std::clamp(*st_.srtt + std::max(SimTime::from_us(1), st_.rttvar * 4), cfg_.min_rto, cfg_.max_rto);
  }

  struct Timing {
    std::int64_t seq_end;
    SimTime sent_at;
  };

  TcpConfig cfg_;
  std::optional<std::int64_t> volume_;
  TcpSenderState st_;
  std::optional<Timing> timing_;
  std::optional<SimTime> rto_deadline_;
  std::uint64_t last_window_emission_ = 0;
  std::uint64_t retransmits_ = 0;
  std::uint64_t fast_retransmits_ = 0;
  std::uint64_t rto_count_ = 0;
};

}  // namespace vhsim::tcp
