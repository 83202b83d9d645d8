#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vhsim/sim_time.hpp"

namespace vhsim {

struct FlowMetrics {
  std::string flow_id;
  std::int64_t goodput_bps = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t spurious_retransmits = 0;
  std::uint64_t rto_count = 0;
  std::uint64_t fast_retransmits = 0;
  // Drops of this flow's data on the old / new downlink path of the first
  // handover of its mobile node.
  std::uint64_t drops_old_path = 0;
  std::uint64_t drops_new_path = 0;
  std::optional<SimTime> handover_gap;
  std::optional<SimTime> t_a0, t_a1, t_a2, t_r0, t_r1, t_r3;
  std::optional<std::uint64_t> old_path_enqueues_after_tr1;
  // Largest single increase between consecutive advertised windows.
  std::int64_t max_rwnd_increase = 0;

  // Payload-byte accounting.
  std::int64_t bytes_sent = 0;
  std::int64_t bytes_delivered = 0;
  std::int64_t bytes_dropped = 0;
  std::int64_t bytes_in_flight = 0;
  std::int64_t bytes_in_order = 0;
};

struct QueueMetrics {
  std::string channel;
  std::uint64_t overflow_drops = 0;
  std::uint64_t coverage_drops = 0;
  std::int64_t peak_occupancy = 0;
};

struct RunMetrics {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<FlowMetrics> flows;
  std::vector<QueueMetrics> queues;
  std::uint64_t no_binding_drops = 0;

  const QueueMetrics* queue(const std::string& channel) const {
    for (const auto& q : queues)
      if (q.channel == channel) return &q;
    return nullptr;
  }
};

inline constexpr const char* kMetricsHeader =
    "scenario,mode,seed,flow_id,goodput_bps,retransmits,spurious_retransmits,rto_count,drops_old_path,"
    "drops_new_path,handover_gap_ms,t_a0,t_a1,t_a2,t_r0,t_r1,t_r3,old_path_enqueues_after_tr1";

inline void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

inline void write_metrics_rows(std::ostream& out, const RunMetrics& m) {
  auto opt_time = [](const std::optional<SimTime>& t) { return t ? t->str() : std::string(); };
  for (const auto& f : m.flows) {
    out << m.scenario << ',' << m.mode << ',' << m.seed << ',' << f.flow_id << ',' << f.goodput_bps << ','
        << f.retransmits << ',' << f.spurious_retransmits << ',' << f.rto_count << ',' << f.drops_old_path << ','
        << f.drops_new_path << ',' << (f.handover_gap ? f.handover_gap->ms_str() : std::string()) << ','
        << opt_time(f.t_a0) << ',' << opt_time(f.t_a1) << ',' << opt_time(f.t_a2) << ',' << opt_time(f.t_r0) << ','
        << opt_time(f.t_r1) << ',' << opt_time(f.t_r3) << ','
        << (f.old_path_enqueues_after_tr1 ? std::to_string(*f.old_path_enqueues_after_tr1) : std::string()) << '\n';
  }
}

inline void write_metrics_csv(std::ostream& out, const std::vector<RunMetrics>& runs) {
  write_metrics_header(out);
  for (const auto& r : runs) write_metrics_rows(out, r);
}

}  // namespace vhsim
