#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/net/link.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/net/topology.hpp"
#include "vhsim/sim_time.hpp"
#include "vhsim/tcp/receiver.hpp"

namespace vhsim::handover {

enum class Direction : std::uint8_t { TerrToSat, SatToTerr, TerrToTerr, IntraSat };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::TerrToSat: return "terr_to_sat";
    case Direction::SatToTerr: return "sat_to_terr";
    case Direction::TerrToTerr: return "terr_to_terr";
    case Direction::IntraSat: return "intra_sat";
  }
  return "?";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "terr_to_sat") return Direction::TerrToSat;
  if (s == "sat_to_terr") return Direction::SatToTerr;
  if (s == "terr_to_terr") return Direction::TerrToTerr;
  if (s == "intra_sat") return Direction::IntraSat;
  return std::nullopt;
}

/// Raised when a planned handover cannot be executed; the old attachment is kept.
class HandoverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// bandwidth (B/s) x rtt, rounded down to whole bytes.
inline std::int64_t estimate_bdp(std::int64_t bandwidth, SimTime rtt) {
  if (bandwidth <= 0) throw ConfigError("BDP estimate needs a positive bandwidth");
  if (rtt <= SimTime::zero()) throw ConfigError("BDP estimate needs a positive RTT");
  return static_cast<std::int64_t>(static_cast<__int128>(bandwidth) * rtt.us() / 1000000);
}

struct PathEstimate {
  std::int64_t bdp = 0;
  SimTime rtt;
  SimTime measured_at;
  friend bool operator==(const PathEstimate&, const PathEstimate&) = default;
};

/// Last bandwidth-delay product the mobile node measured per network kind.
class PathEstimateCache {
 public:
  void store(LinkKind kind, std::int64_t bandwidth, SimTime rtt, SimTime now) {
    entries_[kind] = PathEstimate{estimate_bdp(bandwidth, rtt), rtt, now};
  }
  std::optional<PathEstimate> get(LinkKind kind) const {
    auto it = entries_.find(kind);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::int64_t> bdp(LinkKind kind) const {
    auto e = get(kind);
    return e ? std::optional<std::int64_t>(e->bdp) : std::nullopt;
  }

 private:
  std::map<LinkKind, PathEstimate> entries_;
};

struct WRecResult {
  std::int64_t w_rec = 0;
  // The satellite estimate the choice was checked against.
  std::int64_t sat_win_max = 0;
  // W_Default > SATWin_max does not hold.
  bool chain_violation = false;
  bool from_cache = false;
};

/// Reduced window to advertise before moving onto the satellite:
/// min(SATWin_max, W_Default). Without a cached satellite estimate the
/// configured satellite default stands in for SATWin_max.
inline WRecResult compute_w_rec(std::optional<std::int64_t> cache_sat, std::int64_t w_default,
                                std::int64_t sat_default_window) {
  if (w_default <= 0) throw ConfigError("w_default must be positive");
  WRecResult r;
  r.from_cache = cache_sat.has_value();
  r.sat_win_max = cache_sat.value_or(sat_default_window);
  if (r.sat_win_max <= 0) throw ConfigError("satellite window estimate must be positive");
  r.w_rec = std::min(r.sat_win_max, w_default);
  r.chain_violation = r.sat_win_max >= w_default;
  return r;
}

/// Registration delay at its upper bound,
///   rtt_sat_cn - (rtt_sat_ha + rtt_old_ha) / 2,
/// floored to the microsecond and clamped at zero.
inline SimTime compute_delta(SimTime rtt_mn_sat_cn, SimTime rtt_mn_sat_ha, SimTime rtt_mn_old_ha) {
  if (rtt_mn_sat_cn < SimTime::zero() || rtt_mn_sat_ha < SimTime::zero() || rtt_mn_old_ha < SimTime::zero())
    throw ConfigError("RTT terms must be non-negative");
  const std::int64_t twice = 2 * rtt_mn_sat_cn.us() - rtt_mn_sat_ha.us() - rtt_mn_old_ha.us();
  if (twice <= 0) return SimTime::zero();
  return SimTime::from_us(twice / 2);
}

struct ObservedTimeline {
  std::optional<SimTime> t_a0, t_a1, t_a2, t_r0, t_r1, t_r3;
  bool complete() const { return t_a0 && t_a1 && t_a2 && t_r0 && t_r1 && t_r3; }
};

struct HandoverPlan {
  Direction direction = Direction::TerrToSat;
  std::int64_t w_rec = 0;
  bool chain_violation = false;
  SimTime delta;
  SimTime t_a0;
  SimTime t_r0;
  std::int64_t boost_target = 0;
  std::int64_t boost_step = 0;
  std::int64_t ramp_step = 0;
  std::int64_t ramp_target = 0;
  SimTime drain_timeout;
  ObservedTimeline observed;
};

/// Terrestrial -> satellite: advertise W_REC at detection, register delta later.
inline HandoverPlan plan_terr_to_sat(const PathEstimateCache& cache, std::int64_t w_default,
                                     std::int64_t sat_default_window, const RttTable& rtt, SimTime t_detect,
                                     const LinkSpec& sat_link) {
  const WRecResult w = compute_w_rec(cache.bdp(LinkKind::Sat), w_default, sat_default_window);
  HandoverPlan p;
  p.direction = Direction::TerrToSat;
  p.w_rec = w.w_rec;
  p.chain_violation = w.chain_violation;
  p.delta = compute_delta(rtt.mn_sat_cn, rtt.mn_sat_ha, rtt.mn_old_ha);
  p.t_a0 = t_detect;
  p.t_r0 = t_detect + p.delta;
  if (!sat_link.available_at(p.t_r0))
    throw HandoverAbort("satellite link '" + sat_link.name + "' unavailable at registration time " + p.t_r0.str());
  return p;
}

/// Satellite -> terrestrial: boost by the satellite BDP in 2*mss steps, then at
/// execution close the window, drain the satellite path and ramp back up in
/// 2*mss steps toward the terrestrial BDP.
inline HandoverPlan plan_sat_to_terr(const PathEstimateCache& cache, LinkKind terr_kind, std::int64_t current_win,
                                     std::int64_t mss, std::int64_t buffer, std::int64_t sat_default_window,
                                     const RttTable& rtt, SimTime t_detect) {
  if (mss <= 0 || buffer <= 0) throw ConfigError("mss and buffer must be positive");
  HandoverPlan p;
  p.direction = Direction::SatToTerr;
  p.t_a0 = t_detect;
  p.t_r0 = t_detect;
  const std::int64_t sat_bdp = cache.bdp(LinkKind::Sat).value_or(sat_default_window);
  p.boost_target = std::min(buffer, current_win + sat_bdp);
  p.boost_step = 2 * mss;
  p.ramp_step = 2 * mss;
  p.ramp_target = std::min(buffer, cache.bdp(terr_kind).value_or(buffer));
  p.drain_timeout = rtt.mn_sat_cn * 2;
  return p;
}

/// Positive rational weight parsed from a decimal ("2", "1.5").
struct Weight {
  std::int64_t num = 1;
  std::int64_t den = 1;

  friend bool operator==(const Weight&, const Weight&) = default;

  static Weight parse(std::string_view s) {
    if (s.empty()) throw ConfigError("empty weight");
    auto dot = s.find('.');
    std::string digits(s.substr(0, dot));
    std::int64_t den = 1;
    if (dot != std::string_view::npos) {
      auto frac = s.substr(dot + 1);
      if (frac.size() > 6) throw ConfigError("weight has more than 6 decimals");
      digits += frac;
      for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    }
    if (digits.empty() || digits.size() > 15 || !std::all_of(digits.begin(), digits.end(), [](char c) {
          return c >= '0' && c <= '9';
        }))
      throw ConfigError("malformed weight '" + std::string(s) + "'");
    std::int64_t num = std::stoll(digits);
    if (num <= 0) throw ConfigError("weight must be positive");
    const std::int64_t g = std::gcd(num, den);
    return Weight{num / g, den / g};
  }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    std::int64_t scale = 1;
    int places = 0;
    while (scale % den != 0) {
      scale *= 10;
      ++places;
    }
    std::string digits = std::to_string(num * (scale / den));
    if (static_cast<int>(digits.size()) <= places) digits.insert(0, places - digits.size() + 1, '0');
    digits.insert(digits.size() - places, ".");
    return digits;
  }
};

struct FlowDemand {
  FlowId flow = 0;
  Weight requirement;
  std::int64_t min_share = 0;
};

/// Splits `capacity` bytes of advertised window across flows in proportion to
/// their requirement weights, never below each flow's min_share.
///
/// The result minimises the L1 distance to the exact proportional shares
/// subject to sum <= capacity: every flow gets max(min_share, floor(share)),
/// then spare bytes go one at a time to flows whose fractional remainder is at
/// least one half, largest remainder first, ties to the lower flow id.
inline std::map<FlowId, std::int64_t> allocate_flow_windows(const std::vector<FlowDemand>& demands,
                                                            std::int64_t capacity) {
  std::map<FlowId, std::int64_t> out;
  if (demands.empty()) return out;
  if (capacity < 0) throw ConfigError("capacity must be non-negative");
  std::int64_t min_total = 0;
  std::int64_t lcm_den = 1;
  for (const auto& d : demands) {
    if (d.requirement.num <= 0 || d.requirement.den <= 0) throw ConfigError("flow requirement must be positive");
    if (d.min_share < 0) throw ConfigError("min_share must be non-negative");
    if (out.contains(d.flow)) throw ConfigError("duplicate flow in demand list");
    out[d.flow] = 0;
    min_total += d.min_share;
    lcm_den = std::lcm(lcm_den, d.requirement.den);
  }
  if (capacity < min_total)
    throw ConfigError("capacity " + std::to_string(capacity) + " below the sum of min shares " +
                      std::to_string(min_total));

  using i128 = __int128;
  struct Share {
    i128 weight = 0;
    i128 rem = 0;  // fractional part of the exact share, in units of 1/total
    std::int64_t floor = 0;
    std::int64_t deficit = 0;  // bytes that each bring the flow closer to its share
    std::int64_t alloc = 0;
  };
  const std::size_t n = demands.size();
  std::vector<Share> sh(n);
  i128 total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sh[i].weight = static_cast<i128>(demands[i].requirement.num) * (lcm_den / demands[i].requirement.den);
    total += sh[i].weight;
  }
  std::int64_t deficit_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const i128 num = static_cast<i128>(capacity) * sh[i].weight;
    sh[i].floor = static_cast<std::int64_t>(num / total);
    sh[i].rem = num % total;
    sh[i].alloc = demands[i].min_share;
    sh[i].deficit = std::max<std::int64_t>(0, sh[i].floor - demands[i].min_share);
    deficit_total += sh[i].deficit;
  }
  const std::int64_t budget = capacity - min_total;

  std::vector<std::size_t> order(n);
  auto by_remainder = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sh[a].rem != sh[b].rem) return sh[a].rem > sh[b].rem;
      return demands[a].flow < demands[b].flow;
    });
  };

  if (deficit_total > budget) {
    // Min shares crowd out the floors; every byte handed out is equally good,
    // so split the budget in proportion to each flow's deficit.
    std::int64_t given = 0;
    for (auto& x : sh) {
      const i128 num = static_cast<i128>(budget) * x.deficit;
      const auto q = static_cast<std::int64_t>(num / deficit_total);
      x.rem = num % deficit_total;
      x.alloc += q;
      given += q;
    }
    by_remainder();
    for (std::size_t i : order) {
      if (given >= budget) break;
      if (sh[i].alloc - demands[i].min_share < sh[i].deficit) {
        ++sh[i].alloc;
        ++given;
      }
    }
  } else {
    std::int64_t spare = budget - deficit_total;
    for (auto& x : sh) x.alloc += x.deficit;
    by_remainder();
    for (std::size_t i : order) {
      if (spare == 0) break;
      const bool at_floor = sh[i].alloc == sh[i].floor;
      if (at_floor && sh[i].rem > 0 && 2 * sh[i].rem >= total) {
        ++sh[i].alloc;
        --spare;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) out[demands[i].flow] = sh[i].alloc;
  return out;
}

/// Delays every ACK the receiver emits from now on by `extra_delay`.
inline void set_ack_pacing(tcp::TcpReceiver& receiver, SimTime extra_delay) {
  if (extra_delay < SimTime::zero()) throw ConfigError("ACK pacing delay must be non-negative");
  receiver.set_ack_delay(extra_delay);
}

}  // namespace vhsim::handover
