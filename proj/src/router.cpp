#include "nathijack/router.hpp"

#include <stdexcept>
#include <utility>

namespace nathijack {

std::string_view to_string(RpFilterMode m) {
  switch (m) {
    case RpFilterMode::Disabled: return "Disabled";
    case RpFilterMode::Strict: return "Strict";
    case RpFilterMode::Loose: return "Loose";
  }
  return "?";
}

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::RpFilterViolation: return "RpFilterViolation";
    case DropReason::ApIsolation: return "ApIsolation";
    case DropReason::TtlExpired: return "TtlExpired";
    case DropReason::WindowReject: return "WindowReject";
    case DropReason::NoRoute: return "NoRoute";
  }
  return "?";
}

RpFilterMode parse_rp_filter(std::string_view text) {
  for (auto m : {RpFilterMode::Disabled, RpFilterMode::Strict, RpFilterMode::Loose}) {
    if (text == to_string(m)) return m;
  }
  if (text == "0") return RpFilterMode::Disabled;
  if (text == "1") return RpFilterMode::Strict;
  if (text == "2") return RpFilterMode::Loose;
  throw std::invalid_argument("unknown rp_filter mode: " + std::string(text));
}

bool RouterProfile::satisfies_attack_conditions() const {
  return strategy == PortStrategy::Preservation && rp_filter != RpFilterMode::Strict &&
         window_mode != WindowTrackingMode::Strict;
}

std::string ForwardDecision::to_string() const {
  switch (kind) {
    case Kind::DeliverLan: return "deliver-lan";
    case Kind::DeliverWan: return "deliver-wan";
    case Kind::EmitRst: return "emit-rst";
    case Kind::Drop: return "drop:" + std::string(nathijack::to_string(reason));
  }
  return "?";
}

bool rp_validate(RpFilterMode mode, Interface ingress, IpAddr src, const RouterProfile& profile) {
  switch (mode) {
    case RpFilterMode::Disabled:
      return true;
    case RpFilterMode::Strict: {
      const bool lan_source = profile.lan_subnet.contains(src);
      return lan_source == (ingress == Interface::Lan);
    }
    case RpFilterMode::Loose:
      // Every address is routable through one of the two interfaces here.
      return true;
  }
  return false;
}

namespace {

ConntrackConfig table_config(const RouterProfile& p, std::uint64_t seed, TimeMs established) {
  ConntrackConfig c;
  c.strategy = p.strategy;
  c.window_mode = p.window_mode;
  c.close_timeout_ms = p.close_timeout_ms;
  c.established_timeout_ms = established;
  c.external_ip = p.external_ip;
  c.rng_seed = seed;
  return c;
}

}  // namespace

Router::Router(RouterProfile profile, std::uint64_t seed, TimeMs established_timeout_ms)
    : profile_(std::move(profile)),
      table_(table_config(profile_, seed, established_timeout_ms)) {}

ForwardDecision Router::to_mapping(const NatMapping* m, const TcpSegment& seg, TimeMs now) {
  if (m == nullptr) return ForwardDecision::drop(DropReason::NoRoute, seg);
  if (!table_.window_accepts(*m, seg)) return ForwardDecision::drop(DropReason::WindowReject, seg);
  const NatMapping& updated = table_.apply_transition(m->id, seg, now);
  TcpSegment out = seg;
  out.dst = updated.internal;
  return ForwardDecision::deliver_lan(out);
}

ForwardDecision Router::ingress_lan(const TcpSegment& seg, TimeMs now) {
  if (!rp_validate(profile_.rp_filter, Interface::Lan, seg.src.ip, profile_)) {
    return ForwardDecision::drop(DropReason::RpFilterViolation, seg);
  }
  // Addressed to our own external side: handled like a packet arriving from
  // outside, which is what lets spoofed segments reach LAN hosts.
  if (seg.dst.ip == profile_.external_ip) {
    return to_mapping(table_.lookup_inbound(seg, now), seg, now);
  }
  if (profile_.lan_subnet.contains(seg.dst.ip)) {
    if (seg.dst.ip == profile_.lan_ip()) return ForwardDecision::drop(DropReason::NoRoute, seg);
    if (profile_.ap_isolation) return ForwardDecision::drop(DropReason::ApIsolation, seg);
    return ForwardDecision::deliver_lan(seg);
  }

  if (seg.ttl <= 1) return ForwardDecision::drop(DropReason::TtlExpired, seg);
  TcpSegment out = seg;
  out.ttl = static_cast<std::uint8_t>(seg.ttl - 1);

  const NatMapping* m = table_.lookup_outbound(seg, now);
  if (m == nullptr) {
    const bool can_create = seg.flags.has(kSyn) || seg.flags.has(kPsh) || seg.flags.has(kAck);
    if (seg.flags.has(kRst) || !can_create) return ForwardDecision::drop(DropReason::NoRoute, seg);
    try {
      m = &table_.allocate(seg, now);
    } catch (const PortPoolExhausted&) {
      return ForwardDecision::drop(DropReason::NoRoute, seg);
    }
  } else {
    if (!table_.window_accepts(*m, seg)) return ForwardDecision::drop(DropReason::WindowReject, seg);
    m = &table_.apply_transition(m->id, seg, now);
  }
  out.src = m->external;
  return ForwardDecision::deliver_wan(out);
}

ForwardDecision Router::ingress_wan(const TcpSegment& seg, TimeMs now) {
  if (seg.dst.ip != profile_.external_ip) return ForwardDecision::drop(DropReason::NoRoute, seg);
  const NatMapping* m = table_.lookup_inbound(seg, now);
  if (m != nullptr) return to_mapping(m, seg, now);
  if (seg.flags.has(kRst)) return ForwardDecision::drop(DropReason::NoRoute, seg);

  TcpSegment rst;
  rst.src = seg.dst;
  rst.dst = seg.src;
  rst.flags = TcpFlags(kRst | kAck);
  rst.seq = seg.ack;
  rst.ack = seq_add(seg.seq, seg.payload_len);
  return ForwardDecision::emit_rst(rst);
}

std::vector<IpAddr> Router::answer_record_route(IpAddr target) const {
  if (target == profile_.lan_ip() || profile_.lan_subnet.contains(target)) {
    return {profile_.lan_ip()};
  }
  if (target == profile_.external_ip) {
    if (!profile_.rr_scan_fallback_supported) return {};
    return {profile_.lan_ip(), profile_.external_ip};
  }
  if (!profile_.record_route_supported) return {};
  return {profile_.lan_ip(), profile_.external_ip, target};
}

}  // namespace nathijack
