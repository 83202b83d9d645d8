#pragma once

#include <cstdint>
#include <string>

#include "vhsim/sim_time.hpp"

namespace vhsim {

using FlowId = std::uint32_t;
using LinkId = std::int32_t;
inline constexpr LinkId kNoLink = -1;

enum SegmentFlag : std::uint8_t {
  kData = 1u << 0,
  kAck = 1u << 1,
  kBindingUpdate = 1u << 2,
  kBindingAck = 1u << 3,
  // State-refresh ACK sent while duplicate ACKs are suppressed. Never a dupACK.
  kRefresh = 1u << 4,
};

inline constexpr std::int64_t kTcpIpHeaderBytes = 40;
inline constexpr std::int64_t kControlSegmentBytes = 60;

/// Unit of simulated traffic. Sequence and ACK numbers are byte offsets.
struct Segment {
  FlowId flow = 0;
  std::int64_t seq = 0;
  std::int64_t payload_len = 0;
  std::int64_t ack = 0;
  std::int64_t rwnd = 0;
  std::uint8_t flags = 0;
  SimTime sent_at{};
  // Access link that carried the segment over the radio hop, if any.
  LinkId path_tag = kNoLink;

  // Emission counter stamped by the receiver on ACKs. Lets the sender tell a
  // fresh window advertisement from one overtaken on a faster path.
  std::uint64_t emission = 0;
  // Per-flow transmission counter stamped by the sender on DATA.
  std::uint64_t tx_index = 0;
  bool retransmission = false;

  bool is(SegmentFlag f) const { return (flags & f) != 0; }
  std::int64_t end() const { return seq + payload_len; }

  std::int64_t wire_size() const {
    if (flags & (kBindingUpdate | kBindingAck)) return kControlSegmentBytes;
    return kTcpIpHeaderBytes + payload_len;
  }
};

}  // namespace vhsim
