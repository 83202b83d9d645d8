#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>
#include <utility>

#include "vhsim/errors.hpp"
#include "vhsim/sim_time.hpp"

namespace vhsim {

enum class EventKind : std::uint8_t { PacketArrival, TimerExpiry, HandoverTrigger, AppSend, Control };

struct EventId {
  std::uint64_t value = 0;
  friend constexpr bool operator==(EventId, EventId) = default;
};

/// Seeded generator owned by a kernel. Bounded draws use rejection sampling
/// rather than std::uniform_int_distribution, whose output differs between
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound == 0 yields 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

 private:
  std::mt19937_64 engine_;
};

/// Discrete-event engine. Events fire in (fire_at, insertion order); two
/// events scheduled for the same instant run in the order they were added.
class Kernel {
 public:
  using Handler = std::function<void()>;

  explicit Kernel(std::uint64_t seed = 1) : rng_(seed) {}

  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  SimTime now() const { return now_; }
  Rng& rng() { return rng_; }
  std::size_t pending_count() const { return queue_.size(); }

  EventId schedule(SimTime at, EventKind kind, Handler fn) {
    if (at < now_)
      throw InvariantViolation("event scheduled in the past: " + at.str() + " < " + now_.str());
    const std::uint64_t id = ++next_seq_;
    queue_.emplace(Key{at.us(), id}, Entry{kind, std::move(fn)});
    index_.emplace(id, at.us());
    return EventId{id};
  }

  EventId schedule_in(SimTime delay, EventKind kind, Handler fn) {
    return schedule(now_ + delay, kind, std::move(fn));
  }

  bool cancel(EventId id) {
    auto it = index_.find(id.value);
    if (it == index_.end()) return false;
    queue_.erase(Key{it->second, id.value});
    index_.erase(it);
    return true;
  }

  bool is_pending(EventId id) const { return index_.contains(id.value); }

  /// Processes every event with fire_at <= t_end, including ones scheduled
  /// by handlers during the run, then advances the clock to t_end.
  std::size_t run_until(SimTime t_end) {
    std::size_t steps = 0;
    while (!queue_.empty()) {
      auto it = queue_.begin();
      if (it->first.first > t_end.us()) break;
      const SimTime at = SimTime::from_us(it->first.first);
      ensure(at >= now_, "clock moved backwards");
      Entry entry = std::move(it->second);
      index_.erase(it->first.second);
      queue_.erase(it);
      now_ = at;
      ++steps;
      entry.fn();
    }
    if (t_end > now_) now_ = t_end;
    return steps;
  }

 private:
  using Key = std::pair<std::int64_t, std::uint64_t>;
  struct Entry {
    EventKind kind;
    Handler fn;
  };

  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::map<Key, Entry> queue_;
  std::unordered_map<std::uint64_t, std::int64_t> index_;
  Rng rng_;
};

}  // namespace vhsim
