#pragma once

#include <bitset>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nathijack/conntrack.hpp"
#include "nathijack/packet.hpp"
#include "nathijack/simnet.hpp"

namespace nathijack {

enum class AttackPhase {
  Probe,
  InferPort,
  Evict,
  Steal,
  PayloadDos,
  PayloadHijack,
  RestoreMapping,
  PayloadInject,
  Done,
  Failed
};

enum class Outcome {
  Success,
  Timeout,
  ConnectionKilledUnintentionally,
  RaceLost,
  NotVulnerable,
  AuthNotEstablished,
  NoConnectionFound,
  ExternalIpUnresolvable,
};

enum class NotVulnerableReason { PortStrategy, RpFilter, WindowTracking, ApIsolation };

enum class PayloadKind { Dos, Hijack, Inject, RemoteDos };

std::string_view to_string(AttackPhase p);
std::string_view to_string(Outcome o);
std::string_view to_string(NotVulnerableReason r);
std::string_view to_string(PayloadKind p);
PayloadKind parse_payload(std::string_view text);

struct PortInference {
  SockAddr target_server;
  std::uint16_t candidate = 0;                       // n
  std::optional<std::uint16_t> confirmed;            // m
  std::optional<std::uint16_t> reassigned_observed;  // m'
  std::uint32_t guesses = 0;
};

struct EvictionPlan {
  WindowTrackingMode mode_assumed = WindowTrackingMode::NoCheck;
  std::vector<std::uint32_t> rst_seqs;  // [x] or [x, x + 2^31]
  TimeMs close_timeout_guess_ms = 1000;

  static EvictionPlan make(WindowTrackingMode mode, std::uint32_t x, TimeMs timeout_ms);
};

struct StolenCredentials {
  std::uint32_t seq = 0;  // server snd_nxt
  std::uint32_t ack = 0;  // server rcv_nxt
  TimeMs obtained_at = 0;
};

struct AttackReport {
  std::map<AttackPhase, TimeMs> phase_times;
  Outcome outcome = Outcome::Timeout;
  std::optional<NotVulnerableReason> reason;
  std::uint64_t packets_sent = 0;
  std::optional<StolenCredentials> credentials;
  PortInference inference;
  std::optional<EvictionPlan> plan;
  std::optional<IpAddr> external_ip;
  bool ap_isolation_detected = false;
  std::vector<IpAddr> lan_hosts;
  int evict_attempts = 0;
  TimeMs started_at = 0;
  TimeMs finished_at = 0;
  bool finished = false;

  std::string outcome_label() const;
  TimeMs total_ms() const { return finished_at - started_at; }
};

/// The attacker's own WAN host: echoes the source port it observes on a
/// fresh connection, which lets the attacker calibrate against its own
/// mappings before touching anyone else's.
class EchoHost : public Host {
 public:
  EchoHost(IpAddr ip, std::uint16_t port, std::uint64_t seed)
      : Host("echo", ip, Side::Wan), port_(port), rng_(seed) {}
  void on_segment(SimWorld& world, const TcpSegment& seg) override;
  SockAddr addr() const { return {ip(), port_}; }

 private:
  std::uint16_t port_;
  std::mt19937_64 rng_;
};

struct AttackerConfig {
  SockAddr server;
  PayloadKind payload = PayloadKind::Dos;
  SockAddr echo;
  TimeMs start_at_ms = 0;
  TimeMs deadline_ms = 300'000;  // measured from start_at_ms
  int bandwidth_pps = 4000;
  TimeMs rtt_budget_ms = 8;  // 4 x LAN round trip
  TimeMs steal_budget_ms = 88;
  TimeMs eviction_margin_ms = 100;
  TimeMs retry_jitter_max_ms = 250;
  std::vector<TimeMs> timeout_guesses_ms{1000, 10000};
  std::vector<std::uint16_t> scan_priority;
  std::uint16_t scan_first = kPortPoolFirst;
  std::uint16_t scan_last = kPortPoolLast;
  bool stop_after_inference = false;
  std::string hijack_request = "ftp-get:private.txt";
  std::string forged_tag = "forged-http";
  TimeMs inject_period_ms = 2;
  std::uint64_t seed = 0;
};

/// Off-path attacker attached to the victim's LAN.
class LanAttacker : public Host {
 public:
  using CredentialObserver = std::function<void(const StolenCredentials&)>;

  LanAttacker(IpAddr ip, AttackerConfig config);

  void on_start(SimWorld& world) override;
  void on_segment(SimWorld& world, const TcpSegment& seg) override;
  void on_timer(SimWorld& world, std::uint64_t tag) override;

  void set_credential_observer(CredentialObserver cb) { observer_ = std::move(cb); }
  const AttackReport& report() const { return report_; }
  /// The report as of `now`, with the open phase closed off.
  AttackReport report_at(const SimWorld& world) const;
  AttackPhase phase() const { return phase_; }
  const AttackerConfig& config() const { return config_; }

 private:
  enum class Step {
    Idle,
    CalibConnect,
    CalibReflect,
    Scanning,
    LadderWait,
    LadderProbe,
    EvictWait,
    Stealing,
    HijackWait,
    Restoring,
    Injecting,
    Finished
  };

  void begin(SimWorld& w);
  void finish_probe(SimWorld& w);
  void begin_calibration(SimWorld& w);
  void begin_scan(SimWorld& w);
  void scan_tick(SimWorld& w);
  void confirm(SimWorld& w, std::uint16_t m);
  void begin_evict(SimWorld& w);
  void ladder_rst(SimWorld& w);
  void ladder_probe(SimWorld& w);
  void ladder_verdict(SimWorld& w, bool reflected);
  void cycle(SimWorld& w);
  void steal_probe(SimWorld& w);
  void retry(SimWorld& w);
  void got_credentials(SimWorld& w, const TcpSegment& ack);
  void run_payload(SimWorld& w);
  void finish(SimWorld& w, Outcome o, std::optional<NotVulnerableReason> r = std::nullopt);

  void arm(SimWorld& w, TimeMs delay, std::uint64_t kind);
  void enter_phase(SimWorld& w, AttackPhase p);
  TcpSegment from_me(std::uint16_t sport, SockAddr dst, TcpFlags flags) const;
  TcpSegment spoofed(SockAddr src, SockAddr dst, TcpFlags flags) const;
  std::uint32_t rand32() { return static_cast<std::uint32_t>(rng_()); }

  AttackerConfig config_;
  std::mt19937_64 rng_;
  AttackReport report_;
  AttackPhase phase_ = AttackPhase::Probe;
  TimeMs phase_started_ = 0;
  Step step_ = Step::Idle;
  std::uint64_t epoch_ = 0;
  CredentialObserver observer_;

  IpAddr external_ip_;
  // Calibration against the echo host.
  std::uint16_t calib_port_ = 0;
  std::uint32_t calib_isn_ = 0;
  std::uint32_t echo_base_ = 0;
  std::size_t ladder_step_ = 0;
  std::size_t ladder_guess_ = 0;
  std::uint32_t ladder_seq_ = 0;
  // Port scan.
  std::vector<std::uint16_t> order_;
  std::size_t next_guess_ = 0;
  std::deque<std::pair<std::uint16_t, TimeMs>> outstanding_;
  std::bitset<65536> reflected_;
  // Eviction and theft.
  std::uint16_t m_ = 0;
  TimeMs steal_sent_at_ = 0;
};

struct RemoteAttackerConfig {
  IpAddr router_ip;
  SockAddr server;
  std::uint16_t port_first = kPortPoolFirst;
  std::uint16_t port_last = kPortPoolLast;
  int bandwidth_pps = 4000;
  TimeMs start_at_ms = 0;
  TimeMs purge_wait_ms = 10'100;
  TimeMs cycle_gap_ms = 1000;
  int cycles = 2;
  bool rst_pair = false;
  std::uint64_t seed = 0;
};

/// Blind attacker on the Internet side: RST flood to evict, then a data
/// flood spoofed from the router so the server's challenge ACK is answered
/// by the router's own reset.
class RemoteAttacker : public Host {
 public:
  RemoteAttacker(IpAddr ip, RemoteAttackerConfig config);

  void on_start(SimWorld& world) override;
  void on_segment(SimWorld&, const TcpSegment&) override {}
  void on_timer(SimWorld& world, std::uint64_t tag) override;

  bool done() const { return done_; }
  int cycles_completed() const { return cycles_done_; }
  TimeMs started_at() const { return started_at_; }

 private:
  enum class Stage { RstFlood, DataFlood };
  void tick(SimWorld& w);

  RemoteAttackerConfig config_;
  std::mt19937_64 rng_;
  Stage stage_ = Stage::RstFlood;
  std::uint32_t next_port_ = 0;
  std::uint32_t x_ = 0;
  int cycles_done_ = 0;
  bool done_ = false;
  TimeMs started_at_ = 0;
};

}  // namespace nathijack
