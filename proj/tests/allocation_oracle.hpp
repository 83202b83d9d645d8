#pragma once

// Independent checks for proportional window allocation. Distances are kept
// exact by scaling every share by the total weight.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include "vhsim/handover.hpp"

namespace oracle {

using vhsim::handover::FlowDemand;
using i128 = __int128;

struct Shares {
  std::vector<i128> scaled;  // capacity * w_i, in units of 1/total
  i128 total = 0;
};

inline Shares exact_shares(const std::vector<FlowDemand>& d, std::int64_t capacity) {
  std::int64_t lcm = 1;
  for (const auto& x : d) lcm = std::lcm(lcm, x.requirement.den);
  Shares s;
  for (const auto& x : d) {
    const i128 w = static_cast<i128>(x.requirement.num) * (lcm / x.requirement.den);
    s.scaled.push_back(static_cast<i128>(capacity) * w);
    s.total += w;
  }
  return s;
}

inline i128 abs128(i128 v) { return v < 0 ? -v : v; }

inline i128 l1(const Shares& s, const std::vector<std::int64_t>& a) {
  i128 d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += abs128(static_cast<i128>(a[i]) * s.total - s.scaled[i]);
  return d;
}

/// Smallest L1 distance over every integer allocation with a_i >= min_share
/// and sum <= capacity, by full enumeration. Only for tiny capacities.
inline i128 brute_force_best(const std::vector<FlowDemand>& d, std::int64_t capacity) {
  const Shares s = exact_shares(d, capacity);
  std::vector<std::int64_t> a(d.size());
  i128 best = -1;
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t left) {
    if (i == d.size()) {
      const i128 v = l1(s, a);
      if (best < 0 || v < best) best = v;
      return;
    }
    for (std::int64_t x = d[i].min_share; x <= left; ++x) {
      a[i] = x;
      rec(i + 1, left - x);
    }
  };
  rec(0, capacity);
  return best;
}

/// True when no single-byte change (add, remove, or move one byte between
/// two flows) yields a feasible allocation with a smaller L1 distance. For a
/// separable convex objective under one sum constraint this local condition
/// is also global optimality.
inline bool no_improving_move(const std::vector<FlowDemand>& d, std::int64_t capacity,
                              const std::vector<std::int64_t>& a) {
  const Shares s = exact_shares(d, capacity);
  const std::size_t n = a.size();
  std::int64_t sum = 0;
  for (auto x : a) sum += x;
  if (sum > capacity) return false;
  auto cost = [&](std::size_t i, std::int64_t x) { return abs128(static_cast<i128>(x) * s.total - s.scaled[i]); };
  std::vector<i128> up(n), down(n);
  std::vector<bool> can_down(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] < d[i].min_share) return false;
    const i128 here = cost(i, a[i]);
    up[i] = cost(i, a[i] + 1) - here;
    can_down[i] = a[i] > d[i].min_share;
    down[i] = can_down[i] ? cost(i, a[i] - 1) - here : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sum < capacity && up[i] < 0) return false;
    if (can_down[i] && down[i] < 0) return false;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && can_down[i] && down[i] + up[j] < 0) return false;
  }
  return true;
}

inline std::vector<std::int64_t> as_vector(const std::vector<FlowDemand>& d,
                                           const std::map<vhsim::FlowId, std::int64_t>& m) {
  std::vector<std::int64_t> a;
  for (const auto& x : d) a.push_back(m.at(x.flow));
  return a;
}

}  // namespace oracle
