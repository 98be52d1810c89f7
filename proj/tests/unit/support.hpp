#pragma once

#include <cstdint>
#include <random>

#include "nathijack/packet.hpp"

namespace nathijack::testing {

inline TcpSegment seg(SockAddr src, SockAddr dst, TcpFlags flags, std::uint32_t seq = 0,
                      std::uint32_t ack = 0) {
  TcpSegment s;
  s.src = src;
  s.dst = dst;
  s.flags = flags;
  s.seq = seq;
  s.ack = ack;
  return s;
}

inline const IpAddr kLanBase{192, 168, 1, 0};
inline const IpAddr kVictim{192, 168, 1, 10};
inline const IpAddr kAttacker{192, 168, 1, 199};
inline const IpAddr kExternal{203, 0, 113, 10};
inline const SockAddr kServer{IpAddr{198, 51, 100, 20}, 22};

// Random well-formed segment between arbitrary addresses.
inline TcpSegment random_segment(std::mt19937_64& rng) {
  static constexpr std::uint8_t kShapes[] = {kSyn, kSyn | kAck, kAck, kPsh | kAck, kRst,
                                             kRst | kAck, kFin | kAck};
  TcpSegment s;
  s.src = {IpAddr{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng())};
  s.dst = {IpAddr{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng())};
  s.flags = kShapes[rng() % std::size(kShapes)];
  s.seq = static_cast<std::uint32_t>(rng());
  s.ack = static_cast<std::uint32_t>(rng());
  s.ttl = static_cast<std::uint8_t>(1 + rng() % 64);
  if (s.flags.has(kPsh)) {
    s.payload_tag = PayloadTag("data");
    s.payload_len = 4;
  }
  return s;
}

}  // namespace nathijack::testing
