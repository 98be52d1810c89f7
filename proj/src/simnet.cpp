#include "nathijack/simnet.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace nathijack {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Deadline: return "Deadline";
    case StopReason::Predicate: return "Predicate";
    case StopReason::Empty: return "Empty";
  }
  return "?";
}

SimWorld::SimWorld(Router router, LinkConfig links, std::uint64_t seed)
    : router_(std::move(router)), links_(links), rng_(seed) {
  if (links_.lan_latency_ms < 0 || links_.wan_latency_ms < 0) {
    throw std::invalid_argument("link latency must be non-negative");
  }
}

SimWorld::~SimWorld() = default;

HostId SimWorld::add_host(std::unique_ptr<Host> host) {
  const auto id = static_cast<HostId>(hosts_.size());
  auto& index = host->side() == Side::Lan ? lan_by_ip_ : wan_by_ip_;
  if (!index.emplace(host->ip().value, id).second) {
    throw std::invalid_argument("duplicate host address " + host->ip().to_string());
  }
  host->id_ = id;
  hosts_.push_back(std::move(host));
  shapers_.emplace_back();
  sent_by_.push_back(0);
  if (started_) hosts_.back()->on_start(*this);
  return id;
}

Host* SimWorld::find_host(IpAddr ip, Side side) {
  const auto& index = side == Side::Lan ? lan_by_ip_ : wan_by_ip_;
  auto it = index.find(ip.value);
  return it == index.end() ? nullptr : hosts_[it->second].get();
}

std::uint64_t SimWorld::packets_sent_by(HostId id) const { return sent_by_.at(id); }

void SimWorld::push(TimeMs at, EventKind kind, Interface iface, HostId host, std::uint64_t tag,
                    const TcpSegment& seg) {
  queue_.push(Event{at, next_id_++, kind, iface, host, tag, seg});
}

EventId SimWorld::schedule(HostId host, TimeMs delay_ms, std::uint64_t tag) {
  if (delay_ms < 0) throw std::invalid_argument("negative schedule delay");
  if (host >= hosts_.size()) throw std::out_of_range("unknown host id");
  const EventId id = next_id_;
  push(clock_ + delay_ms, EventKind::Timer, Interface::Lan, host, tag, TcpSegment{});
  return id;
}

// Segment k of a burst leaves at epoch + floor(k * 1000 / pps); the burst
// restarts once the sender has gone idle.
TimeMs SimWorld::departure(HostId from) {
  const int pps = hosts_[from]->bandwidth_pps();
  if (pps <= 0) return clock_;
  Shaper& s = shapers_[from];
  const auto slot = [&](std::uint64_t k) {
    return s.epoch + static_cast<TimeMs>(k * 1000 / static_cast<std::uint64_t>(pps));
  };
  if (s.k == 0 || slot(s.k) < clock_) {
    s.epoch = clock_;
    s.k = 0;
  }
  return slot(s.k++);
}

void SimWorld::send(HostId from, const TcpSegment& seg) {
  if (from >= hosts_.size()) throw std::out_of_range("send from unknown host");
  Host& h = *hosts_[from];
  ++stats_.sent;
  ++sent_by_[from];
  if (tracing_) record(h.name(), "tx", seg, "");
  if (links_.loss_probability > 0.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < links_.loss_probability) {
    ++stats_.lost;
    return;
  }
  const TimeMs dep = departure(from);
  if (h.side() == Side::Lan) {
    push(dep + links_.lan_latency_ms, EventKind::RouterIngress, Interface::Lan, 0, 0, seg);
    ++stats_.in_flight;
  } else {
    route_wan(seg, dep);
  }
}

void SimWorld::route_wan(const TcpSegment& seg, TimeMs depart) {
  const TimeMs at = depart + links_.wan_latency_ms;
  if (seg.dst.ip == router_.profile().external_ip) {
    push(at, EventKind::RouterIngress, Interface::Wan, 0, 0, seg);
    ++stats_.in_flight;
    return;
  }
  if (seg.ttl <= links_.wan_hops) {
    drop(DropReason::TtlExpired, "wan", seg);
    return;
  }
  auto it = wan_by_ip_.find(seg.dst.ip.value);
  if (it == wan_by_ip_.end()) {
    drop(DropReason::NoRoute, "wan", seg);
    return;
  }
  push(at, EventKind::Deliver, Interface::Wan, it->second, 0, seg);
  ++stats_.in_flight;
}

void SimWorld::drop(DropReason r, const std::string& where, const TcpSegment& seg) {
  ++stats_.dropped;
  ++stats_.drops_by_reason[r];
  if (tracing_) record(where, "drop", seg, std::string(to_string(r)));
}

void SimWorld::record(const std::string& host, const char* dir, const TcpSegment& seg,
                      const std::string& decision) {
  trace_.push_back(TraceRecord{clock_, host, dir, seg.summary(), decision});
}

void SimWorld::dispatch(const Event& ev) {
  switch (ev.kind) {
    case EventKind::Timer:
      hosts_[ev.host]->on_timer(*this, ev.tag);
      return;
    case EventKind::Deliver: {
      --stats_.in_flight;
      ++stats_.delivered;
      Host& h = *hosts_[ev.host];
      if (tracing_) record(h.name(), "rx", ev.seg, "");
      h.on_segment(*this, ev.seg);
      return;
    }
    case EventKind::RouterIngress:
      break;
  }

  --stats_.in_flight;
  const ForwardDecision d = ev.iface == Interface::Lan ? router_.ingress_lan(ev.seg, clock_)
                                                       : router_.ingress_wan(ev.seg, clock_);
  if (tracing_ && d.kind != ForwardDecision::Kind::Drop) {
    record("router", ev.iface == Interface::Lan ? "lan-in" : "wan-in", ev.seg, d.to_string());
  }
  switch (d.kind) {
    case ForwardDecision::Kind::DeliverLan: {
      auto it = lan_by_ip_.find(d.seg.dst.ip.value);
      if (it == lan_by_ip_.end()) {
        drop(DropReason::NoRoute, "router", d.seg);
        return;
      }
      push(clock_ + links_.lan_latency_ms, EventKind::Deliver, Interface::Lan, it->second, 0, d.seg);
      ++stats_.in_flight;
      return;
    }
    case ForwardDecision::Kind::DeliverWan:
      route_wan(d.seg, clock_);
      return;
    case ForwardDecision::Kind::EmitRst:
      // The triggering segment ends at the router; the reset is a new send.
      ++stats_.delivered;
      ++stats_.sent;
      route_wan(d.seg, clock_);
      return;
    case ForwardDecision::Kind::Drop:
      drop(d.reason, "router", d.seg);
      return;
  }
}

void SimWorld::start() {
  started_ = true;
  for (std::size_t i = 0; i < hosts_.size(); ++i) hosts_[i]->on_start(*this);
}

StopReason SimWorld::run_until(TimeMs deadline_ms, const std::function<bool()>& stop) {
  if (!started_) start();
  while (!queue_.empty()) {
    if (queue_.top().at > deadline_ms) {
      if (deadline_ms > clock_) {
        clock_ = deadline_ms;
        router_.conntrack().purge_expired(clock_);
      }
      return StopReason::Deadline;
    }
    const Event ev = queue_.top();
    queue_.pop();
    if (ev.at > clock_) {
      clock_ = ev.at;
      router_.conntrack().purge_expired(clock_);
    }
    ++stats_.events;
    dispatch(ev);
    if (stop && stop()) return StopReason::Predicate;
  }
  return StopReason::Empty;
}

std::vector<IpAddr> SimWorld::traceroute(HostId from) const {
  std::vector<IpAddr> hops;
  if (hosts_.at(from)->side() == Side::Lan) hops.push_back(router_.profile().lan_ip());
  hops.insert(hops.end(), upstream_.gateways.begin(), upstream_.gateways.end());
  return hops;
}

bool SimWorld::ping(HostId from, IpAddr target) const {
  const Host& src = *hosts_.at(from);
  const RouterProfile& p = router_.profile();
  if (target == src.ip()) return false;
  if (src.side() == Side::Lan) {
    if (target == p.lan_ip()) return true;
    if (p.lan_subnet.contains(target)) return !p.ap_isolation && lan_by_ip_.count(target.value) > 0;
  }
  if (target == p.external_ip) return true;
  const auto known = [&](const std::vector<IpAddr>& v) {
    return std::find(v.begin(), v.end(), target) != v.end();
  };
  return known(upstream_.gateways) || known(upstream_.live_hosts) ||
         wan_by_ip_.count(target.value) > 0;
}

std::vector<IpAddr> SimWorld::ping_record_route(HostId from, IpAddr target) const {
  if (!ping(from, target) || hosts_.at(from)->side() != Side::Lan) return {};
  return router_.answer_record_route(target);
}

std::vector<IpAddr> SimWorld::scan_upstream(HostId from, IpAddr gateway) const {
  std::vector<IpAddr> found;
  if (!ping(from, gateway)) return found;
  for (IpAddr h : upstream_.live_hosts) {
    if (ping(from, h)) found.push_back(h);
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<IpAddr> SimWorld::scan_lan(HostId from) const {
  std::vector<IpAddr> found;
  for (const auto& h : hosts_) {
    if (h->side() == Side::Lan && h->id() != from && ping(from, h->ip())) found.push_back(h->ip());
  }
  std::sort(found.begin(), found.end());
  return found;
}

void SimWorld::write_trace(std::ostream& out) const {
  out << "time_ms\thost\tdirection\tsegment\tdecision\n";
  for (const auto& r : trace_) {
    out << r.time_ms << '\t' << r.host << '\t' << r.direction << '\t' << r.summary << '\t'
        << r.decision << '\n';
  }
}

}  // namespace nathijack
