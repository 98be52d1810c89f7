#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "nathijack/attacker.hpp"
#include "nathijack/endpoints.hpp"
#include "nathijack/router.hpp"
#include "nathijack/simnet.hpp"

namespace nathijack {

/// Public server running the ssh, ftp and http apps on their default ports.
class ServerHost : public Host {
 public:
  ServerHost(IpAddr ip, std::uint64_t seed);
  void on_segment(SimWorld& world, const TcpSegment& seg) override;

  ServerEndpoint& endpoint(std::uint16_t port) { return endpoints_.at(port); }
  const ServerEndpoint& endpoint(std::uint16_t port) const { return endpoints_.at(port); }

 private:
  std::map<std::uint16_t, ServerEndpoint> endpoints_;
};

/// Victim machine: one client connection plus its request loop.
class ClientHost : public Host {
 public:
  ClientHost(IpAddr ip, ClientEndpoint client, TimeMs first_request_at, std::uint64_t seed);
  void on_start(SimWorld& world) override;
  void on_segment(SimWorld& world, const TcpSegment& seg) override;
  void on_timer(SimWorld& world, std::uint64_t tag) override;

  const ClientEndpoint& client() const { return client_; }

 private:
  ClientEndpoint client_;
  TimeMs first_request_at_;
  std::mt19937_64 rng_;
};

/// A LAN peer that answers pings and nothing else.
class Bystander : public Host {
 public:
  using Host::Host;
  void on_segment(SimWorld&, const TcpSegment&) override {}
};

inline const IpAddr kServerIp{198, 51, 100, 20};
inline const IpAddr kEchoIp{198, 51, 100, 77};
inline const IpAddr kRemoteAttackerIp{192, 0, 2, 66};
inline constexpr std::uint16_t kEchoPort = 7;

struct ScenarioConfig {
  RouterProfile profile;
  PayloadKind payload = PayloadKind::Dos;
  TrafficModel victim_traffic = TrafficModel::fixed(60'000);
  bool victim_connects = true;
  bool victim_logs_in = true;
  std::optional<std::uint16_t> victim_port;  // default: uniform over the ephemeral range
  std::optional<TimeMs> first_request_at;    // default: uniform in [0, interval)
  bool prioritize_ephemeral = true;
  std::optional<IpAddr> attacker_ip;
  TimeMs attack_start_ms = 1500;
  TimeMs attack_deadline_ms = 300'000;
  bool stop_after_inference = false;
  int attacker_pps = 4000;
  int remote_cycles = 2;
  std::uint64_t seed = 0;
  std::ostream* trace = nullptr;
};

inline constexpr std::uint16_t kEphemeralFirst = 32768;
inline constexpr std::uint16_t kEphemeralLast = 60999;

struct ScenarioResult {
  Outcome outcome = Outcome::Timeout;
  std::optional<NotVulnerableReason> reason;
  AttackReport report;
  std::uint16_t victim_port = 0;
  // Ground truth read directly from endpoint and router state.
  std::optional<std::uint16_t> mapped_victim_port;
  std::optional<StolenCredentials> server_state_at_theft;
  bool credentials_exact = false;
  bool server_closed = false;
  bool victim_closed_by_rst = false;
  std::vector<std::string> victim_displayed;
  NetStats stats;
  TimeMs ended_at = 0;

  bool success() const { return outcome == Outcome::Success; }
  std::string label() const;
};

AppModel app_for(PayloadKind payload);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace nathijack
