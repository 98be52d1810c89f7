#include <doctest.h>

#include <random>

#include "nathijack/router.hpp"
#include "support.hpp"

using namespace nathijack;
using testing::seg;
using Kind = ForwardDecision::Kind;

namespace {

RouterProfile vulnerable() {
  RouterProfile p;
  p.name = "test";
  p.close_timeout_ms = 1000;
  return p;
}

const SockAddr kExt5000{testing::kExternal, 5000};

}  // namespace

TEST_CASE("reverse path validation") {
  const RouterProfile p = vulnerable();
  const IpAddr lan{192, 168, 1, 10};
  const IpAddr outside{10, 0, 0, 5};
  CHECK(rp_validate(RpFilterMode::Strict, Interface::Lan, lan, p));
  CHECK_FALSE(rp_validate(RpFilterMode::Strict, Interface::Lan, outside, p));
  CHECK_FALSE(rp_validate(RpFilterMode::Strict, Interface::Wan, lan, p));
  CHECK(rp_validate(RpFilterMode::Strict, Interface::Wan, outside, p));
  CHECK(rp_validate(RpFilterMode::Loose, Interface::Lan, outside, p));
  CHECK(rp_validate(RpFilterMode::Disabled, Interface::Lan, outside, p));
  CHECK(parse_rp_filter("1") == RpFilterMode::Strict);
  CHECK(parse_rp_filter("Loose") == RpFilterMode::Loose);
}

TEST_CASE("attack conditions") {
  RouterProfile p = vulnerable();
  CHECK(p.satisfies_attack_conditions());
  p.window_mode = WindowTrackingMode::Liberal2G;
  CHECK(p.satisfies_attack_conditions());
  p.rp_filter = RpFilterMode::Loose;
  CHECK(p.satisfies_attack_conditions());
  p.rp_filter = RpFilterMode::Strict;
  CHECK_FALSE(p.satisfies_attack_conditions());
  p = vulnerable();
  p.window_mode = WindowTrackingMode::Strict;
  CHECK_FALSE(p.satisfies_attack_conditions());
  p = vulnerable();
  p.strategy = PortStrategy::RandomSelection;
  CHECK_FALSE(p.satisfies_attack_conditions());
}

TEST_CASE("LAN ingress") {
  Router r(vulnerable(), 1);
  const auto out = r.ingress_lan(seg({testing::kVictim, 5000}, testing::kServer, kSyn, 1), 0);
  REQUIRE(out.kind == Kind::DeliverWan);
  CHECK(out.seg.src == kExt5000);
  CHECK(out.seg.ttl == 63);

  SUBCASE("spoofed server segments reach whoever owns the mapping") {
    const auto d = r.ingress_lan(seg(testing::kServer, kExt5000, kSyn | kAck, 9, 2), 1);
    REQUIRE(d.kind == Kind::DeliverLan);
    CHECK(d.seg.dst == SockAddr{testing::kVictim, 5000});
  }
  SUBCASE("the attacker's own mapping reflects back to the attacker") {
    r.ingress_lan(seg({testing::kAttacker, 6000}, testing::kServer, kSyn, 1), 1);
    const auto d = r.ingress_lan(seg(testing::kServer, {testing::kExternal, 6000}, kSyn | kAck), 2);
    REQUIRE(d.kind == Kind::DeliverLan);
    CHECK(d.seg.dst == SockAddr{testing::kAttacker, 6000});
  }
  SUBCASE("no mapping, no reflection") {
    const auto d = r.ingress_lan(seg(testing::kServer, {testing::kExternal, 6001}, kSyn | kAck), 2);
    CHECK(d.dropped(DropReason::NoRoute));
  }
  SUBCASE("ttl") {
    TcpSegment s = seg({testing::kAttacker, 7000}, testing::kServer, kSyn);
    s.ttl = 2;
    const auto d = r.ingress_lan(s, 1);
    REQUIRE(d.kind == Kind::DeliverWan);
    CHECK(d.seg.ttl == 1);
    s.ttl = 1;
    s.src.port = 7001;
    CHECK(r.ingress_lan(s, 1).dropped(DropReason::TtlExpired));
  }
  SUBCASE("LAN to LAN") {
    const auto s = seg({testing::kAttacker, 1}, {testing::kVictim, 2}, kAck);
    CHECK(r.ingress_lan(s, 1).kind == Kind::DeliverLan);
    RouterProfile iso = vulnerable();
    iso.ap_isolation = true;
    Router ri(iso);
    CHECK(ri.ingress_lan(s, 1).dropped(DropReason::ApIsolation));
  }
  SUBCASE("outbound RST with no mapping is not forwarded") {
    CHECK(r.ingress_lan(seg({testing::kAttacker, 1}, testing::kServer, kRst), 1)
              .dropped(DropReason::NoRoute));
  }
}

TEST_CASE("WAN ingress") {
  Router r(vulnerable(), 1);
  r.ingress_lan(seg({testing::kVictim, 5000}, testing::kServer, kSyn, 1), 0);

  SUBCASE("the server's challenge ACK follows the mapping") {
    const auto d = r.ingress_wan(seg(testing::kServer, kExt5000, kAck, 500, 2), 5);
    REQUIRE(d.kind == Kind::DeliverLan);
    CHECK(d.seg.dst.ip == testing::kVictim);
    CHECK(d.seg.seq == 500);
    CHECK(d.seg.ack == 2);
  }
  SUBCASE("no mapping draws a reset") {
    TcpSegment data = seg(testing::kServer, {testing::kExternal, 5001}, kPsh | kAck, 10, 77);
    data.payload_len = 5;
    const auto d = r.ingress_wan(data, 5);
    REQUIRE(d.kind == Kind::EmitRst);
    CHECK(d.seg.flags.has(kRst));
    CHECK(d.seg.src == SockAddr{testing::kExternal, 5001});
    CHECK(d.seg.dst == testing::kServer);
    CHECK(d.seg.seq == 77);
    CHECK(d.seg.ack == 15);
  }
  SUBCASE("a reset is never answered with a reset") {
    const auto d = r.ingress_wan(seg(testing::kServer, {testing::kExternal, 5001}, kRst), 5);
    CHECK(d.dropped(DropReason::NoRoute));
  }
  SUBCASE("not our address") {
    CHECK(r.ingress_wan(seg(testing::kServer, {IpAddr{203, 0, 113, 99}, 5000}, kAck), 5)
              .dropped(DropReason::NoRoute));
  }
  SUBCASE("RST evicts after the close timeout") {
    CHECK(r.ingress_wan(seg(testing::kServer, kExt5000, kRst), 100).kind == Kind::DeliverLan);
    CHECK(r.conntrack().lookup_inbound(seg(testing::kServer, kExt5000, kAck), 1099) != nullptr);
    CHECK(r.ingress_wan(seg(testing::kServer, kExt5000, kAck), 1100).kind == Kind::EmitRst);
  }
}

TEST_CASE("record route") {
  RouterProfile p = vulnerable();
  const IpAddr upstream{100, 64, 0, 1};
  Router r(p);
  CHECK(r.answer_record_route(upstream) ==
        std::vector<IpAddr>{p.lan_ip(), p.external_ip, upstream});
  CHECK(r.answer_record_route(p.external_ip) == std::vector<IpAddr>{p.lan_ip(), p.external_ip});
  p.record_route_supported = false;
  CHECK(Router(p).answer_record_route(upstream).empty());
  CHECK_FALSE(Router(p).answer_record_route(p.external_ip).empty());
  p.rr_scan_fallback_supported = false;
  CHECK(Router(p).answer_record_route(p.external_ip).empty());
}

TEST_CASE("strict reverse path filtering drops every foreign LAN source") {
  RouterProfile p = vulnerable();
  p.rp_filter = RpFilterMode::Strict;
  Router r(p);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    TcpSegment s = testing::random_segment(rng);
    if (p.lan_subnet.contains(s.src.ip)) continue;
    if (i % 2 == 0) s.dst.ip = p.external_ip;
    CHECK(r.ingress_lan(s, i).dropped(DropReason::RpFilterViolation));
  }
}

TEST_CASE("AP isolation never delivers LAN to LAN") {
  RouterProfile p = vulnerable();
  p.ap_isolation = true;
  Router r(p);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5000; ++i) {
    TcpSegment s = testing::random_segment(rng);
    s.src.ip = IpAddr{p.lan_subnet.base.value + static_cast<std::uint32_t>(rng() % 256)};
    s.dst.ip = IpAddr{p.lan_subnet.base.value + static_cast<std::uint32_t>(rng() % 256)};
    CHECK(r.ingress_lan(s, i).kind == Kind::Drop);
  }
}

TEST_CASE("the router never emits a reset in reply to a reset") {
  Router r(vulnerable(), 3);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    TcpSegment s = testing::random_segment(rng);
    s.dst.ip = testing::kExternal;
    s.dst.port = static_cast<std::uint16_t>(5000 + rng() % 4);
    if (i % 10 == 0) {
      r.ingress_lan(seg({testing::kVictim, s.dst.port}, s.src, kSyn), i);
    }
    const auto d = r.ingress_wan(s, i);
    if (s.flags.has(kRst)) CHECK(d.kind != Kind::EmitRst);
  }
}

TEST_CASE("forwarding is deterministic") {
  RouterProfile p = vulnerable();
  p.strategy = PortStrategy::RandomSelection;
  p.window_mode = WindowTrackingMode::Liberal2G;
  const auto run = [&] {
    Router r(p, 42);
    std::mt19937_64 rng(9);
    std::vector<std::string> out;
    for (int i = 0; i < 2000; ++i) {
      TcpSegment s = testing::random_segment(rng);
      const bool lan = rng() % 2 == 0;
      if (lan) s.src.ip = IpAddr{p.lan_subnet.base.value + 2 + static_cast<std::uint32_t>(rng() % 4)};
      else s.dst.ip = p.external_ip;
      const auto d = lan ? r.ingress_lan(s, i) : r.ingress_wan(s, i);
      out.push_back(d.to_string() + " " + d.seg.summary());
    }
    return out;
  };
  CHECK(run() == run());
}
