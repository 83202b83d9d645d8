#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "allocation_oracle.hpp"
#include "vhsim/handover.hpp"

using namespace vhsim;
using namespace vhsim::literals;
using namespace vhsim::handover;

namespace {

constexpr std::int64_t kMss = 1460;

LinkSpec sat_link() {
  LinkSpec s;
  s.name = "sat";
  s.kind = LinkKind::Sat;
  s.bandwidth = 125000;
  s.prop_delay = 250_ms;
  s.queue_capacity = 65536;
  return s;
}

FlowDemand demand(FlowId id, std::int64_t num, std::int64_t den = 1, std::int64_t min_share = 0) {
  return FlowDemand{id, Weight{num, den}, min_share};
}

}  // namespace

TEST(Bdp, BandwidthTimesRtt) {
  EXPECT_EQ(estimate_bdp(125000, 520_ms), 65000);
  EXPECT_EQ(estimate_bdp(1250000, 20_ms), 25000);
  EXPECT_THROW(estimate_bdp(125000, 0_ms), ConfigError);
  EXPECT_THROW(estimate_bdp(0, 1_s), ConfigError);
}

TEST(Bdp, CacheKeepsLatestPerKind) {
  PathEstimateCache c;
  EXPECT_FALSE(c.bdp(LinkKind::Sat));
  c.store(LinkKind::Sat, 125000, 520_ms, 1_s);
  c.store(LinkKind::Wlan, 1250000, 20_ms, 2_s);
  EXPECT_EQ(*c.bdp(LinkKind::Sat), 65000);
  c.store(LinkKind::Sat, 125000, 256_ms, 3_s);
  EXPECT_EQ(*c.bdp(LinkKind::Sat), 32000);
  EXPECT_EQ(c.get(LinkKind::Sat)->measured_at, 3_s);
  EXPECT_EQ(*c.bdp(LinkKind::Wlan), 25000);
}

TEST(WRec, MinOfSatelliteEstimateAndDefault) {
  auto a = compute_w_rec(32000, 65535, 65536);
  EXPECT_EQ(a.w_rec, 32000);
  EXPECT_FALSE(a.chain_violation);
  auto b = compute_w_rec(65000, 65000, 65536);
  EXPECT_EQ(b.w_rec, 65000);
  EXPECT_TRUE(b.chain_violation);
  auto c = compute_w_rec(std::nullopt, 131072, 48000);
  EXPECT_EQ(c.w_rec, 48000);
  EXPECT_FALSE(c.from_cache);
  EXPECT_FALSE(c.chain_violation);
}

TEST(Delta, RegistrationDelay) {
  EXPECT_EQ(compute_delta(600_ms, 550_ms, 80_ms), 285_ms);
  EXPECT_EQ(compute_delta(500_ms, 600_ms, 400_ms), 0_ms);
  EXPECT_EQ(compute_delta(500_ms, 500_ms, 500_ms), 0_ms);
  EXPECT_EQ(compute_delta(1_us, 0_us, 1_us), 0_us);  // half a microsecond floors away
  EXPECT_EQ(compute_delta(2_us, 0_us, 1_us), 1_us);
  EXPECT_THROW(compute_delta(0_ms - 1_ms, 0_ms, 0_ms), ConfigError);
}

TEST(Plan, TerrestrialToSatellite) {
  PathEstimateCache c;
  c.store(LinkKind::Sat, 125000, 520_ms, 0_s);
  const RttTable rtt{520_ms, 550_ms, 80_ms};
  auto p = plan_terr_to_sat(c, 131072, 65536, rtt, 10_s, sat_link());
  EXPECT_EQ(p.w_rec, 65000);
  EXPECT_FALSE(p.chain_violation);
  EXPECT_EQ(p.delta, 205_ms);
  EXPECT_EQ(p.t_a0, 10_s);
  EXPECT_EQ(p.t_r0, 10_s + 205_ms);

  auto q = plan_terr_to_sat(c, 32000, 65536, rtt, 10_s, sat_link());
  EXPECT_EQ(q.w_rec, 32000);
  EXPECT_TRUE(q.chain_violation);
}

TEST(Plan, SatelliteUnavailableAborts) {
  PathEstimateCache c;
  LinkSpec s = sat_link();
  s.availability = {{0_s, 10_s}, {20_s, 30_s}};
  const RttTable rtt{520_ms, 550_ms, 80_ms};
  EXPECT_THROW(plan_terr_to_sat(c, 131072, 65536, rtt, 10_s, s), HandoverAbort);
  EXPECT_NO_THROW(plan_terr_to_sat(c, 131072, 65536, rtt, 20_s, s));
}

TEST(Plan, SatelliteToTerrestrialBoost) {
  PathEstimateCache c;
  c.store(LinkKind::Sat, 125000, 520_ms, 0_s);
  c.store(LinkKind::Wlan, 1250000, 20_ms, 0_s);
  const RttTable rtt{520_ms, 550_ms, 80_ms};
  auto p = plan_sat_to_terr(c, LinkKind::Wlan, 65000, kMss, 262144, 65536, rtt, 10_s);
  EXPECT_EQ(p.boost_target, 130000);
  EXPECT_EQ(p.boost_step, 2 * kMss);
  EXPECT_EQ(p.ramp_step, 2 * kMss);
  EXPECT_EQ(p.ramp_target, 25000);
  EXPECT_EQ(p.drain_timeout, 1040_ms);

  // Driven through the receiver: 23 ACKs to reach the boosted window.
  tcp::TcpReceiver r(0, 262144, 65000);
  r.start_ramp(p.boost_target, p.boost_step);
  int acks = 0;
  Segment d;
  d.flags = kData;
  d.payload_len = kMss;
  while (r.ramp_active()) {
    d.seq = acks * kMss;
    r.on_segment(d, 0_s);
    ++acks;
  }
  EXPECT_EQ(acks, 23);
  EXPECT_EQ(r.advertised_window(), 130000);
}

TEST(Plan, BoostNeverExceedsBuffer) {
  PathEstimateCache c;
  const RttTable rtt{520_ms, 550_ms, 80_ms};
  auto p = plan_sat_to_terr(c, LinkKind::Wlan, 60000, kMss, 100000, 65536, rtt, 0_s);
  EXPECT_EQ(p.boost_target, 100000);
  EXPECT_EQ(p.ramp_target, 100000);
}

TEST(Weight, ParseAndRender) {
  EXPECT_EQ(Weight::parse("2"), (Weight{2, 1}));
  EXPECT_EQ(Weight::parse("1.5"), (Weight{3, 2}));
  EXPECT_EQ(Weight::parse("0.25"), (Weight{1, 4}));
  EXPECT_EQ(Weight::parse("0.25").str(), "0.25");
  EXPECT_EQ(Weight::parse("3.10").str(), "3.1");
  EXPECT_EQ(Weight::parse("0.000001").str(), "0.000001");
  EXPECT_THROW(Weight::parse("0"), ConfigError);
  EXPECT_THROW(Weight::parse("-1"), ConfigError);
  EXPECT_THROW(Weight::parse("1.2.3"), ConfigError);
  EXPECT_THROW(Weight::parse(""), ConfigError);
  EXPECT_THROW(Weight::parse("0.0000001"), ConfigError);
}

TEST(Allocation, ExactProportion) {
  auto m = allocate_flow_windows({demand(1, 2), demand(2, 1)}, 60000);
  EXPECT_EQ(m.at(1), 40000);
  EXPECT_EQ(m.at(2), 20000);
}

TEST(Allocation, SingleFlowGetsEverything) {
  auto m = allocate_flow_windows({demand(7, 3)}, 12345);
  EXPECT_EQ(m.at(7), 12345);
}

TEST(Allocation, ThreeEqualFlows) {
  std::vector<FlowDemand> d{demand(1, 1), demand(2, 1), demand(3, 1)};
  auto m = allocate_flow_windows(d, 10000);
  std::int64_t sum = 0;
  for (auto [id, v] : m) {
    sum += v;
    EXPECT_LE(std::abs(v - 3333), kMss);
  }
  EXPECT_LE(sum, 10000);
  EXPECT_TRUE(oracle::no_improving_move(d, 10000, oracle::as_vector(d, m)));
}

TEST(Allocation, MinShareRespected) {
  std::vector<FlowDemand> d{demand(1, 9), demand(2, 1, 1, 5000)};
  auto m = allocate_flow_windows(d, 20000);
  EXPECT_GE(m.at(2), 5000);
  EXPECT_LE(m.at(1) + m.at(2), 20000);
  EXPECT_THROW(allocate_flow_windows({demand(1, 1, 1, 6000), demand(2, 1, 1, 6000)}, 10000), ConfigError);
  EXPECT_THROW(allocate_flow_windows({demand(1, 1), demand(1, 2)}, 10000), ConfigError);
}

TEST(Allocation, BruteForceOptimalOnSmallCapacities) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + gen() % 4;
    const std::int64_t cap = static_cast<std::int64_t>(gen() % 41);
    std::vector<FlowDemand> d;
    std::int64_t mins = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t ms = gen() % 3 == 0 ? static_cast<std::int64_t>(gen() % 6) : 0;
      d.push_back(demand(static_cast<FlowId>(i), 1 + static_cast<std::int64_t>(gen() % 7),
                         1 + static_cast<std::int64_t>(gen() % 3), ms));
      mins += ms;
    }
    if (mins > cap) continue;
    auto a = oracle::as_vector(d, allocate_flow_windows(d, cap));
    const auto s = oracle::exact_shares(d, cap);
    ASSERT_EQ(oracle::l1(s, a), oracle::brute_force_best(d, cap)) << "trial " << trial;
  }
}

TEST(Allocation, ScaledWeightsGiveSameResult) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 4;
    std::vector<FlowDemand> d, scaled;
    const std::int64_t k = 2 + static_cast<std::int64_t>(gen() % 50);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t w = 1 + static_cast<std::int64_t>(gen() % 9);
      d.push_back(demand(static_cast<FlowId>(i), w));
      scaled.push_back(demand(static_cast<FlowId>(i), w * k));
    }
    const std::int64_t cap = static_cast<std::int64_t>(gen() % (20 * kMss + 1));
    EXPECT_EQ(allocate_flow_windows(d, cap), allocate_flow_windows(scaled, cap));
  }
}

TEST(AckPacing, SetsReceiverDelay) {
  tcp::TcpReceiver r(0, 65536);
  set_ack_pacing(r, 50_ms);
  EXPECT_EQ(r.state().ack_delay, 50_ms);
  set_ack_pacing(r, 0_ms);
  EXPECT_EQ(r.state().ack_delay, 0_ms);
  EXPECT_THROW(set_ack_pacing(r, 0_ms - 1_ms), ConfigError);
}
