#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim {

enum class LinkKind : std::uint8_t { Wired, Wlan, Gprs, Sat };

inline std::string_view to_string(LinkKind k) {
  switch (k) {
    case LinkKind::Wired: return "wired";
    case LinkKind::Wlan: return "wlan";
    case LinkKind::Gprs: return "gprs";
    case LinkKind::Sat: return "sat";
  }
  return "?";
}

inline std::optional<LinkKind> parse_link_kind(std::string_view s) {
  if (s == "wired") return LinkKind::Wired;
  if (s == "wlan") return LinkKind::Wlan;
  if (s == "gprs") return LinkKind::Gprs;
  if (s == "sat") return LinkKind::Sat;
  return std::nullopt;
}

inline bool is_terrestrial_access(LinkKind k) { return k == LinkKind::Wlan || k == LinkKind::Gprs; }

/// Half-open coverage interval [start, end).
struct Interval {
  SimTime start;
  SimTime end;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct LinkSpec {
  std::string name;
  LinkKind kind = LinkKind::Wired;
  std::int64_t bandwidth = 0;  // bytes per second
  SimTime prop_delay{};
  std::int64_t queue_capacity = 0;  // bytes
  // Empty means the link is always up.
  std::vector<Interval> availability;

  friend bool operator==(const LinkSpec&, const LinkSpec&) = default;

  bool available_at(SimTime t) const {
    if (availability.empty()) return true;
    auto it = std::upper_bound(availability.begin(), availability.end(), t,
                               [](SimTime v, const Interval& iv) { return v < iv.start; });
    if (it == availability.begin()) return false;
    --it;
    return t < it->end;
  }

  /// Start of the first coverage interval at or after t.
  std::optional<SimTime> next_available(SimTime t) const {
    if (available_at(t)) return t;
    for (const auto& iv : availability)
      if (iv.start >= t) return iv.start;
    return std::nullopt;
  }

  /// Time to clock `bytes` onto the link, rounded up to the next microsecond.
  SimTime serialization(std::int64_t bytes) const {
    if (bytes <= 0) return SimTime::zero();
    const auto num = static_cast<__int128>(bytes) * 1000000;
    const auto us = (num + bandwidth - 1) / bandwidth;
    return SimTime::from_us(static_cast<std::int64_t>(us));
  }

  void validate(std::int64_t max_segment_bytes) const {
    if (bandwidth <= 0) throw ConfigError("link '" + name + "': bandwidth must be positive");
    if (prop_delay < SimTime::zero()) throw ConfigError("link '" + name + "': negative delay");
    if (queue_capacity < max_segment_bytes)
      throw ConfigError("link '" + name + "': queue must hold at least one maximum segment (" +
                        std::to_string(max_segment_bytes) + " B)");
    for (std::size_t i = 0; i < availability.size(); ++i) {
      const auto& iv = availability[i];
      if (iv.start < SimTime::zero() || !(iv.start < iv.end))
        throw ConfigError("link '" + name + "': empty or negative availability interval");
      if (i > 0 && iv.start < availability[i - 1].end)
        throw ConfigError("link '" + name + "': availability intervals must be sorted and disjoint");
    }
  }
};

/// FIFO byte-bounded queue in front of a link transmitter. A segment occupies
/// the queue from the moment it is accepted until its last bit has been
/// serialized onto the link.
class DropTailQueue {
 public:
  explicit DropTailQueue(std::int64_t capacity = 0) : capacity_(capacity) {}

  std::int64_t capacity() const { return capacity_; }
  std::int64_t occupancy() const { return occupancy_; }
  std::size_t size() const { return entries_.size(); }

  /// Drops every entry whose serialization finished at or before `now`.
  void release_until(SimTime now) {
    while (!entries_.empty() && entries_.front().tx_end <= now) {
      occupancy_ -= entries_.front().bytes;
      entries_.pop_front();
    }
  }

  bool has_room(std::int64_t bytes) const { return occupancy_ + bytes <= capacity_; }

  void push(std::int64_t bytes, SimTime tx_end) {
    occupancy_ += bytes;
    ensure(occupancy_ <= capacity_, "drop-tail queue over capacity");
    entries_.push_back({bytes, tx_end});
  }

 private:
  struct Entry {
    std::int64_t bytes;
    SimTime tx_end;
  };
  std::int64_t capacity_;
  std::int64_t occupancy_ = 0;
  std::deque<Entry> entries_;
};

enum class DropReason : std::uint8_t { Overflow, NoCoverage };

inline std::string_view to_string(DropReason r) {
  return r == DropReason::Overflow ? "OVERFLOW" : "NO_COVERAGE";
}

struct TransmitResult {
  std::optional<SimTime> arrival;
  DropReason reason = DropReason::Overflow;

  bool dropped() const { return !arrival.has_value(); }
};

/// One direction of a link: queue, transmitter and propagation.
class Channel {
 public:
  Channel(LinkSpec spec, LinkId link, std::string from, std::string to)
      : spec_(std::move(spec)), link_(link), from_(std::move(from)), to_(std::move(to)),
        queue_(spec_.queue_capacity) {}

  const LinkSpec& spec() const { return spec_; }
  LinkId link() const { return link_; }
  const std::string& from() const { return from_; }
  const std::string& to() const { return to_; }
  std::string label() const { return from_ + "->" + to_; }
  const DropTailQueue& queue() const { return queue_; }

  std::uint64_t overflow_drops() const { return overflow_drops_; }
  std::uint64_t coverage_drops() const { return coverage_drops_; }
  std::int64_t peak_occupancy() const { return peak_occupancy_; }

  /// Store-and-forward model. Calls must arrive with non-decreasing `at`.
  TransmitResult transmit(const Segment& s, SimTime at) { return transmit_bytes(s.wire_size(), at); }

  TransmitResult transmit_bytes(std::int64_t bytes, SimTime at) {
    if (at < last_call_) throw InvariantViolation("channel " + label() + " driven backwards in time");
    last_call_ = at;
    queue_.release_until(at);
    if (!spec_.available_at(at)) {
      ++coverage_drops_;
      return {std::nullopt, DropReason::NoCoverage};
    }
    if (!queue_.has_room(bytes)) {
      ++overflow_drops_;
      return {std::nullopt, DropReason::Overflow};
    }
    const SimTime start = std::max(at, busy_until_);
    const SimTime tx_end = start + spec_.serialization(bytes);
    busy_until_ = tx_end;
    queue_.push(bytes, tx_end);
    peak_occupancy_ = std::max(peak_occupancy_, queue_.occupancy());
    return {tx_end + spec_.prop_delay, DropReason::Overflow};
  }

 private:
  LinkSpec spec_;
  LinkId link_;
  std::string from_;
  std::string to_;
  DropTailQueue queue_;
  SimTime busy_until_{};
  SimTime last_call_{};
  std::uint64_t overflow_drops_ = 0;
  std::uint64_t coverage_drops_ = 0;
  std::int64_t peak_occupancy_ = 0;
};

}  // namespace vhsim
