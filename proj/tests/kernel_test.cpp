#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vhsim/errors.hpp"
#include "vhsim/kernel.hpp"

using namespace vhsim;
using namespace vhsim::literals;

TEST(Kernel, PopsInTimeOrder) {
  Kernel k;
  std::vector<int> seen;
  k.schedule(2_s, EventKind::Control, [&] { seen.push_back(2); });
  k.schedule(1_s, EventKind::Control, [&] { seen.push_back(1); });
  EXPECT_EQ(k.run_until(10_s), 2u);
  EXPECT_EQ(seen, (std::vector<int>{1, 2}));
}

TEST(Kernel, SimultaneousEventsRunInInsertionOrder) {
  Kernel k;
  std::string order;
  k.schedule(1_s, EventKind::Control, [&] { order += 'A'; });
  k.schedule(1_s, EventKind::Control, [&] { order += 'B'; });
  k.run_until(1_s);
  EXPECT_EQ(order, "AB");
}

TEST(Kernel, EventAtNowFiresBeforeLaterOnes) {
  Kernel k;
  std::string order;
  k.schedule(5_ms, EventKind::Control, [&] {
    order += 'a';
    k.schedule(5_ms, EventKind::Control, [&] { order += 'n'; });
  });
  k.schedule(6_ms, EventKind::Control, [&] { order += 'l'; });
  k.run_until(1_s);
  EXPECT_EQ(order, "anl");
}

TEST(Kernel, CancelSemantics) {
  Kernel k;
  bool fired = false;
  auto id = k.schedule(1_s, EventKind::TimerExpiry, [&] { fired = true; });
  EXPECT_TRUE(k.is_pending(id));
  EXPECT_TRUE(k.cancel(id));
  EXPECT_FALSE(k.cancel(id));
  k.run_until(2_s);
  EXPECT_FALSE(fired);

  auto done = k.schedule(3_s, EventKind::TimerExpiry, [] {});
  k.run_until(4_s);
  EXPECT_FALSE(k.cancel(done));
}

TEST(Kernel, EmptyRunAdvancesClock) {
  Kernel k;
  EXPECT_EQ(k.run_until(7_s), 0u);
  EXPECT_EQ(k.now(), 7_s);
}

TEST(Kernel, StopsAtHorizonAndKeepsLaterEvents) {
  Kernel k;
  int n = 0;
  for (int i = 1; i <= 3; ++i) k.schedule(SimTime::from_seconds(i), EventKind::Control, [&] { ++n; });
  k.schedule(5_s, EventKind::Control, [&] { ++n; });
  EXPECT_EQ(k.run_until(4_s), 3u);
  EXPECT_EQ(n, 3);
  EXPECT_EQ(k.pending_count(), 1u);
  EXPECT_EQ(k.now(), 4_s);
}

TEST(Kernel, HandlerSchedulingWithinHorizonRunsSameCall) {
  Kernel k;
  int n = 0;
  k.schedule(1_s, EventKind::Control, [&] {
    ++n;
    k.schedule_in(1_s, EventKind::Control, [&] { ++n; });
  });
  EXPECT_EQ(k.run_until(2_s), 2u);
  EXPECT_EQ(n, 2);
}

TEST(Kernel, SchedulingInThePastIsAnError) {
  Kernel k;
  k.run_until(5_s);
  EXPECT_THROW(k.schedule(4_s, EventKind::Control, [] {}), InvariantViolation);
  k.schedule(6_s, EventKind::Control, [&] { k.schedule(1_s, EventKind::Control, [] {}); });
  EXPECT_THROW(k.run_until(10_s), InvariantViolation);
}

// Random schedules and cancellations against a sorted reference list.
TEST(Kernel, MatchesReferenceOrderUnderRandomCancellation) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 gen(seed);
    Kernel k;
    std::vector<std::pair<std::int64_t, int>> expected;  // (time, insertion)
    std::vector<int> fired;
    std::vector<EventId> ids;
    for (int i = 0; i < 300; ++i) {
      const std::int64_t t = static_cast<std::int64_t>(gen() % 50);
      ids.push_back(k.schedule(SimTime::from_ms(t), EventKind::Control, [&fired, i] { fired.push_back(i); }));
      expected.emplace_back(t, i);
    }
    std::vector<bool> cancelled(300, false);
    for (int j = 0; j < 60; ++j) {
      const auto victim = static_cast<std::size_t>(gen() % 300);
      EXPECT_EQ(k.cancel(ids[victim]), !cancelled[victim]);
      cancelled[victim] = true;
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> want;
    for (const auto& [t, i] : expected)
      if (!cancelled[static_cast<std::size_t>(i)]) want.push_back(i);
    k.run_until(1_s);
    EXPECT_EQ(fired, want) << "seed " << seed;
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, BoundedDrawsStayInRangeAndCoverIt) {
  Rng r(7);
  std::map<std::uint64_t, int> hist;
  for (int i = 0; i < 6000; ++i) {
    const auto v = r.below(6);
    ASSERT_LT(v, 6u);
    ++hist[v];
  }
  EXPECT_EQ(hist.size(), 6u);
  for (const auto& [v, n] : hist) EXPECT_GT(n, 800) << v;
  EXPECT_EQ(r.below(0), 0u);
  EXPECT_EQ(r.below(1), 0u);
}
