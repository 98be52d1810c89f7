#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "nathijack/packet.hpp"
#include "nathijack/router.hpp"

namespace nathijack {

class SimWorld;
using HostId = std::uint32_t;
using EventId = std::uint64_t;

enum class Side { Lan, Wan };

/// Anything with an address that can receive segments and timers.
class Host {
 public:
  Host(std::string name, IpAddr ip, Side side, int bandwidth_pps = 0)
      : name_(std::move(name)), ip_(ip), side_(side), bandwidth_pps_(bandwidth_pps) {}
  virtual ~Host() = default;
  Host(const Host&) = delete;
  Host& operator=(const Host&) = delete;

  virtual void on_start(SimWorld&) {}
  virtual void on_segment(SimWorld& world, const TcpSegment& seg) = 0;
  virtual void on_timer(SimWorld&, std::uint64_t /*tag*/) {}

  const std::string& name() const { return name_; }
  IpAddr ip() const { return ip_; }
  Side side() const { return side_; }
  int bandwidth_pps() const { return bandwidth_pps_; }
  HostId id() const { return id_; }

 private:
  friend class SimWorld;
  std::string name_;
  IpAddr ip_;
  Side side_;
  int bandwidth_pps_;
  HostId id_ = 0;
};

struct LinkConfig {
  TimeMs lan_latency_ms = 1;
  TimeMs wan_latency_ms = 10;
  // Routers between our WAN port and any WAN host; a segment leaving the
  // router needs ttl > wan_hops to arrive.
  int wan_hops = 3;
  double loss_probability = 0.0;
};

/// What sits beyond the router, as seen by ICMP-level probing.
struct UpstreamConfig {
  std::vector<IpAddr> gateways;    // hop 2, 3, ... on the way out
  std::vector<IpAddr> live_hosts;  // responders in the second gateway's subnet
};

struct NetStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t lost = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t events = 0;
  std::map<DropReason, std::uint64_t> drops_by_reason;
};

enum class StopReason { Deadline, Predicate, Empty };
std::string_view to_string(StopReason r);

struct TraceRecord {
  TimeMs time_ms;
  std::string host;
  std::string direction;
  std::string summary;
  std::string decision;
};

class SimWorld {
 public:
  SimWorld(Router router, LinkConfig links = {}, std::uint64_t seed = 0);
  ~SimWorld();

  template <class H, class... Args>
  H& emplace_host(Args&&... args) {
    auto h = std::make_unique<H>(std::forward<Args>(args)...);
    H& ref = *h;
    add_host(std::move(h));
    return ref;
  }
  HostId add_host(std::unique_ptr<Host> host);
  Host& host(HostId id) { return *hosts_.at(id); }
  Host* find_host(IpAddr ip, Side side);

  /// Enqueues a timer `delay_ms` from now. Throws on negative delay.
  EventId schedule(HostId host, TimeMs delay_ms, std::uint64_t tag);
  /// Hands a segment to the network; the sender's bandwidth shapes departure.
  void send(HostId from, const TcpSegment& seg);

  StopReason run_until(TimeMs deadline_ms, const std::function<bool()>& stop = {});

  TimeMs now() const { return clock_; }
  Router& router() { return router_; }
  const Router& router() const { return router_; }
  const LinkConfig& links() const { return links_; }
  const NetStats& stats() const { return stats_; }
  std::uint64_t packets_sent_by(HostId id) const;

  UpstreamConfig& upstream() { return upstream_; }

  // ICMP-level probing, answered synchronously.
  std::vector<IpAddr> traceroute(HostId from) const;
  /// Empty when the target does not answer or the option is not filled in.
  std::vector<IpAddr> ping_record_route(HostId from, IpAddr target) const;
  bool ping(HostId from, IpAddr target) const;
  /// Live hosts in the subnet of `gateway`, as an upstream scan would find.
  std::vector<IpAddr> scan_upstream(HostId from, IpAddr gateway) const;
  /// LAN peers answering a ping sweep of the subnet.
  std::vector<IpAddr> scan_lan(HostId from) const;

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  void write_trace(std::ostream& out) const;

 private:
  enum class EventKind : std::uint8_t { RouterIngress, Deliver, Timer };
  struct Event {
    TimeMs at;
    EventId id;
    EventKind kind;
    Interface iface;
    HostId host;
    std::uint64_t tag;
    TcpSegment seg;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.id > b.id;
    }
  };
  struct Shaper {
    TimeMs epoch = 0;
    std::uint64_t k = 0;
  };

  void push(TimeMs at, EventKind kind, Interface iface, HostId host, std::uint64_t tag,
            const TcpSegment& seg);
  TimeMs departure(HostId from);
  void dispatch(const Event& ev);
  void route_wan(const TcpSegment& seg, TimeMs depart);
  void drop(DropReason r, const std::string& where, const TcpSegment& seg);
  void record(const std::string& host, const char* dir, const TcpSegment& seg,
              const std::string& decision);
  void start();

  Router router_;
  LinkConfig links_;
  std::mt19937_64 rng_;
  UpstreamConfig upstream_;
  TimeMs clock_ = 0;
  EventId next_id_ = 1;
  bool started_ = false;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<std::unique_ptr<Host>> hosts_;
  std::vector<Shaper> shapers_;
  std::vector<std::uint64_t> sent_by_;
  std::unordered_map<std::uint32_t, HostId> lan_by_ip_;
  std::unordered_map<std::uint32_t, HostId> wan_by_ip_;
  NetStats stats_;
  bool tracing_ = false;
  std::vector<TraceRecord> trace_;
};

}  // namespace nathijack
