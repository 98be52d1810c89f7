#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nathijack/conntrack.hpp"
#include "nathijack/packet.hpp"

namespace nathijack {

enum class RpFilterMode { Disabled = 0, Strict = 1, Loose = 2 };
enum class Interface { Lan, Wan };
enum class DropReason { RpFilterViolation, ApIsolation, TtlExpired, WindowReject, NoRoute };

std::string_view to_string(RpFilterMode m);
std::string_view to_string(DropReason r);
RpFilterMode parse_rp_filter(std::string_view text);

struct RouterProfile {
  std::string name;
  std::string vendor;
  PortStrategy strategy = PortStrategy::Preservation;
  RpFilterMode rp_filter = RpFilterMode::Disabled;
  WindowTrackingMode window_mode = WindowTrackingMode::NoCheck;
  TimeMs close_timeout_ms = kDefaultCloseTimeoutMs;
  bool ap_isolation = false;
  IpAddr external_ip{203, 0, 113, 10};
  Subnet lan_subnet{IpAddr{192, 168, 1, 0}, 24};
  // Whether the router fills in RECORD_ROUTE for pings it forwards
  // upstream, and for pings addressed to its own external address.
  bool record_route_supported = true;
  bool rr_scan_fallback_supported = true;

  IpAddr lan_ip() const { return IpAddr{lan_subnet.base.value + 1}; }
  /// Port preservation, spoofed LAN packets forwarded, blind RSTs accepted.
  bool satisfies_attack_conditions() const;
};

struct ForwardDecision {
  enum class Kind { DeliverLan, DeliverWan, Drop, EmitRst };

  Kind kind = Kind::Drop;
  TcpSegment seg;  // post-translation segment, or the generated RST
  DropReason reason = DropReason::NoRoute;

  static ForwardDecision deliver_lan(const TcpSegment& s) { return {Kind::DeliverLan, s, {}}; }
  static ForwardDecision deliver_wan(const TcpSegment& s) { return {Kind::DeliverWan, s, {}}; }
  static ForwardDecision emit_rst(const TcpSegment& s) { return {Kind::EmitRst, s, {}}; }
  static ForwardDecision drop(DropReason r, const TcpSegment& s) { return {Kind::Drop, s, r}; }

  bool dropped(DropReason r) const { return kind == Kind::Drop && reason == r; }
  std::string to_string() const;
};

bool rp_validate(RpFilterMode mode, Interface ingress, IpAddr src, const RouterProfile& profile);

/// Consumer Wi-Fi router: one LAN subnet, one external address, NAT44.
class Router {
 public:
  explicit Router(RouterProfile profile, std::uint64_t seed = 0,
                  TimeMs established_timeout_ms = kDefaultEstablishedTimeoutMs);

  ForwardDecision ingress_lan(const TcpSegment& seg, TimeMs now);
  ForwardDecision ingress_wan(const TcpSegment& seg, TimeMs now);

  /// Addresses recorded by a RECORD_ROUTE ping from the LAN to `target`.
  /// Empty when the router does not fill in the option.
  std::vector<IpAddr> answer_record_route(IpAddr target) const;

  const RouterProfile& profile() const { return profile_; }
  ConntrackTable& conntrack() { return table_; }
  const ConntrackTable& conntrack() const { return table_; }

 private:
  ForwardDecision to_mapping(const NatMapping* m, const TcpSegment& seg, TimeMs now);

  RouterProfile profile_;
  ConntrackTable table_;
};

}  // namespace nathijack
