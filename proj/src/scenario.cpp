#include "nathijack/scenario.hpp"

#include <ostream>

namespace nathijack {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix(seed ^ splitmix(stream));
}

enum ClientTimer : std::uint64_t { kRequest = 1 };

UpstreamConfig upstream_for(const RouterProfile& p) {
  UpstreamConfig u;
  const bool cgn = Subnet::parse("100.64.0.0/10").contains(p.external_ip);
  const IpAddr second = cgn ? IpAddr{100, 64, 0, 1} : IpAddr{(p.external_ip.value & 0xFFFFFF00U) | 1U};
  u.gateways = {second, IpAddr{198, 18, 0, 1}};
  IpAddr neighbour{second.value + 1};
  if (neighbour == p.external_ip) neighbour = IpAddr{second.value + 2};
  u.live_hosts = {p.external_ip, neighbour};
  return u;
}

}  // namespace

ServerHost::ServerHost(IpAddr ip, std::uint64_t seed) : Host("server", ip, Side::Wan) {
  std::uint64_t k = 0;
  for (const AppModel& app : {AppModel::ssh(), AppModel::ftp(), AppModel::http()}) {
    const std::uint16_t port = app.default_port();
    endpoints_.emplace(port, ServerEndpoint(SockAddr{ip, port}, app, sub_seed(seed, ++k)));
  }
}

void ServerHost::on_segment(SimWorld& world, const TcpSegment& seg) {
  auto it = endpoints_.find(seg.dst.port);
  if (it == endpoints_.end()) return;
  for (const TcpSegment& out : it->second.handle(seg, world.now())) world.send(id(), out);
}

ClientHost::ClientHost(IpAddr ip, ClientEndpoint client, TimeMs first_request_at,
                       std::uint64_t seed)
    : Host("victim", ip, Side::Lan),
      client_(std::move(client)),
      first_request_at_(first_request_at),
      rng_(seed) {}

void ClientHost::on_start(SimWorld& world) {
  world.send(id(), client_.connect(world.now()));
  world.schedule(id(), first_request_at_, kRequest);
}

void ClientHost::on_segment(SimWorld& world, const TcpSegment& seg) {
  for (const TcpSegment& out : client_.handle(seg, world.now())) world.send(id(), out);
}

void ClientHost::on_timer(SimWorld& world, std::uint64_t) {
  if (client_.conn().state == ConnState::Closed) return;
  for (const TcpSegment& out : client_.tick(world.now())) world.send(id(), out);
  world.schedule(id(), client_.traffic().draw(rng_), kRequest);
}

std::string ScenarioResult::label() const {
  std::string s(to_string(outcome));
  if (reason) s += "(" + std::string(to_string(*reason)) + ")";
  return s;
}

AppModel app_for(PayloadKind payload) {
  switch (payload) {
    case PayloadKind::Hijack: return AppModel::ftp();
    case PayloadKind::Inject: return AppModel::http();
    case PayloadKind::Dos:
    case PayloadKind::RemoteDos: return AppModel::ssh();
  }
  return AppModel::ssh();
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult res;
  const RouterProfile& profile = cfg.profile;
  std::mt19937_64 rng(sub_seed(cfg.seed, 0));

  SimWorld world(Router(profile, sub_seed(cfg.seed, 1)), LinkConfig{}, sub_seed(cfg.seed, 2));
  world.upstream() = upstream_for(profile);
  if (cfg.trace) world.enable_trace(true);

  const AppModel app = app_for(cfg.payload);
  const SockAddr server_addr{kServerIp, app.default_port()};
  auto& server = world.emplace_host<ServerHost>(kServerIp, sub_seed(cfg.seed, 3));
  world.emplace_host<EchoHost>(kEchoIp, kEchoPort, sub_seed(cfg.seed, 4));

  const std::uint32_t base = profile.lan_subnet.base.value;
  const IpAddr victim_ip{base + 10};
  res.victim_port = cfg.victim_port.value_or(
      static_cast<std::uint16_t>(std::uniform_int_distribution<int>(kEphemeralFirst, kEphemeralLast)(rng)));
  const SockAddr victim_addr{victim_ip, res.victim_port};

  const ClientHost* victim = nullptr;
  if (cfg.victim_connects) {
    ClientEndpoint client(victim_addr, server_addr, app, cfg.victim_traffic, sub_seed(cfg.seed, 5));
    client.set_login_on_connect(cfg.victim_logs_in);
    const TimeMs first = cfg.first_request_at.value_or(
        std::uniform_int_distribution<TimeMs>(0, cfg.victim_traffic.interval_min_ms - 1)(rng));
    victim = &world.emplace_host<ClientHost>(victim_ip, std::move(client), first, sub_seed(cfg.seed, 6));
  } else {
    world.emplace_host<Bystander>("victim", victim_ip, Side::Lan);
  }
  world.emplace_host<Bystander>("bystander-1", IpAddr{base + 11}, Side::Lan);
  world.emplace_host<Bystander>("bystander-2", IpAddr{base + 12}, Side::Lan);

  const auto victim_closed = [&] {
    return victim != nullptr && victim->client().conn().state == ConnState::Closed;
  };
  const auto server_conn = [&]() -> const TcpEndpointConn* {
    if (!res.mapped_victim_port) return nullptr;
    return server.endpoint(server_addr.port).find(SockAddr{profile.external_ip, *res.mapped_victim_port});
  };
  const auto finish = [&] {
    if (const TcpEndpointConn* c = server_conn()) res.server_closed = c->state == ConnState::Closed;
    if (victim) {
      res.victim_closed_by_rst = victim->client().conn().closed_by_rst;
      for (const auto& d : victim->client().displayed()) res.victim_displayed.push_back(d.tag);
    }
    res.stats = world.stats();
    res.ended_at = world.now();
    if (cfg.trace) world.write_trace(*cfg.trace);
  };

  // Let the victim connection settle, then read the ground truth.
  world.run_until(std::max<TimeMs>(0, cfg.attack_start_ms - 1));
  if (victim) {
    TcpSegment probe;
    probe.src = victim_addr;
    probe.dst = server_addr;
    if (const NatMapping* m = world.router().conntrack().lookup_outbound(probe, world.now())) {
      res.mapped_victim_port = m->external.port;
    }
  }

  if (cfg.payload == PayloadKind::RemoteDos) {
    RemoteAttackerConfig rc;
    rc.router_ip = profile.external_ip;
    rc.server = server_addr;
    rc.start_at_ms = cfg.attack_start_ms;
    rc.bandwidth_pps = cfg.attacker_pps;
    rc.cycles = cfg.remote_cycles;
    rc.seed = sub_seed(cfg.seed, 7);
    world.emplace_host<RemoteAttacker>(kRemoteAttackerIp, rc);
    world.run_until(cfg.attack_start_ms + cfg.attack_deadline_ms, victim_closed);
    finish();
    if (res.server_closed && res.victim_closed_by_rst) {
      res.outcome = Outcome::Success;
    } else if (profile.window_mode == WindowTrackingMode::Strict) {
      res.outcome = Outcome::NotVulnerable;
      res.reason = NotVulnerableReason::WindowTracking;
    } else {
      res.outcome = Outcome::Timeout;
    }
    return res;
  }

  AttackerConfig ac;
  ac.server = server_addr;
  ac.payload = cfg.payload;
  ac.echo = SockAddr{kEchoIp, kEchoPort};
  ac.start_at_ms = cfg.attack_start_ms;
  ac.deadline_ms = cfg.attack_deadline_ms;
  ac.bandwidth_pps = cfg.attacker_pps;
  ac.stop_after_inference = cfg.stop_after_inference;
  ac.seed = sub_seed(cfg.seed, 8);
  if (cfg.prioritize_ephemeral) {
    for (std::uint32_t p = kEphemeralFirst; p <= kEphemeralLast; ++p) {
      ac.scan_priority.push_back(static_cast<std::uint16_t>(p));
    }
  }
  const IpAddr attacker_ip = cfg.attacker_ip.value_or(IpAddr{base + 199});
  auto& attacker = world.emplace_host<LanAttacker>(attacker_ip, ac);

  std::size_t displayed_at_theft = 0;
  bool stolen = false;
  attacker.set_credential_observer([&](const StolenCredentials& c) {
    stolen = true;
    if (victim) displayed_at_theft = victim->client().displayed().size();
    const TcpEndpointConn* conn = server.endpoint(server_addr.port)
                                      .find(SockAddr{profile.external_ip, attacker.report().inference.confirmed.value_or(0)});
    if (conn) {
      res.server_state_at_theft = StolenCredentials{conn->snd_nxt, conn->rcv_nxt, world.now()};
      res.credentials_exact = conn->snd_nxt == c.seq && conn->rcv_nxt == c.ack;
    }
  });

  const TimeMs hard_stop = cfg.attack_start_ms + cfg.attack_deadline_ms + 1000;
  if (cfg.payload == PayloadKind::Inject) {
    world.run_until(hard_stop, [&] {
      if (attacker.report().finished) return true;
      if (!stolen) return false;
      return victim_closed() || victim->client().displayed().size() > displayed_at_theft;
    });
  } else {
    world.run_until(hard_stop, [&] { return attacker.report().finished; });
  }

  res.report = attacker.report_at(world);
  res.outcome = res.report.outcome;
  res.reason = res.report.reason;

  if (cfg.payload == PayloadKind::Dos && !cfg.stop_after_inference && res.success()) {
    // The victim has to find out on its next request.
    world.run_until(world.now() + cfg.victim_traffic.interval_max_ms + 2000, [&] {
      const TcpEndpointConn* c = server_conn();
      return victim_closed() && c && c->state == ConnState::Closed;
    });
    finish();
    if (!(res.server_closed && res.victim_closed_by_rst)) res.outcome = Outcome::RaceLost;
    return res;
  }
  finish();
  if (cfg.payload == PayloadKind::Inject && stolen && victim) {
    const auto& shown = victim->client().displayed();
    if (shown.size() > displayed_at_theft) {
      const bool forged = shown[displayed_at_theft].tag == ac.forged_tag;
      res.outcome = forged ? Outcome::Success : Outcome::RaceLost;
      res.reason.reset();
    } else if (victim_closed()) {
      res.outcome = Outcome::ConnectionKilledUnintentionally;
      res.reason.reset();
    }
  }
  return res;
}

}  // namespace nathijack
