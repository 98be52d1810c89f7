#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "nathijack/packet.hpp"

namespace nathijack {

enum class ConnState { SynSent, SynReceived, Established, Closed };
enum class AppKind { Ssh, Ftp, Http };

std::string_view to_string(ConnState s);
std::string_view to_string(AppKind k);

class FileUnknown : public std::runtime_error {
 public:
  explicit FileUnknown(const std::string& file) : std::runtime_error("no such file: " + file) {}
};

/// Abstract application behaviour. Requests and responses are tags.
struct AppModel {
  AppKind kind = AppKind::Ssh;
  // Ftp
  std::map<std::string, std::string> files;  // name -> owner
  bool login_required = true;
  bool session_authed = false;
  // Http
  TimeMs update_interval_ms = 60'000;
  std::string payload_tag = "http-quote";

  static AppModel ssh();
  static AppModel ftp();
  static AppModel http();

  /// The periodic request a client of this app sends.
  std::string request_tag() const;
  std::uint16_t default_port() const;
  /// Server side: consumes one request, returns the response tag.
  std::string respond(std::string_view request);
};

inline constexpr std::string_view kForgedHttpTag = "forged-http";
inline constexpr std::string_view kPrivateFile = "private.txt";

struct TcpEndpointConn {
  SockAddr local;
  SockAddr peer;
  std::uint32_t snd_nxt = 0;
  std::uint32_t rcv_nxt = 0;
  ConnState state = ConnState::Closed;
  AppModel app;
  bool closed_by_rst = false;
};

/// True iff the session on `conn` may read `file`. Throws FileUnknown.
bool ftp_authorize(const AppModel& app, const TcpEndpointConn& conn, const std::string& file);

struct TrafficModel {
  TimeMs interval_min_ms = 60'000;
  TimeMs interval_max_ms = 60'000;
  int bandwidth_pps = 0;  // 0: unshaped

  static TrafficModel fixed(TimeMs interval_ms);
  static TrafficModel uniform(TimeMs lo_ms, TimeMs hi_ms);
  TimeMs draw(std::mt19937_64& rng) const;
};

class ServerEndpoint {
 public:
  ServerEndpoint(SockAddr listen, AppModel app, std::uint64_t seed);

  std::vector<TcpSegment> handle(const TcpSegment& seg, TimeMs now);

  const TcpEndpointConn* find(const SockAddr& peer) const;
  const SockAddr& listen() const { return listen_; }
  std::size_t challenge_acks_sent() const { return challenge_acks_; }
  /// 0 disables the limit (the default).
  void set_challenge_ack_limit(int per_second) { challenge_ack_limit_ = per_second; }

 private:
  std::uint32_t fresh_isn();
  std::optional<TcpSegment> challenge_ack(const TcpEndpointConn& c, TimeMs now);
  static TcpSegment reset_for(const TcpSegment& seg);

  SockAddr listen_;
  AppModel app_proto_;
  std::mt19937_64 rng_;
  std::unordered_set<std::uint32_t> used_isns_;
  std::map<SockAddr, TcpEndpointConn> conns_;
  int challenge_ack_limit_ = 0;
  TimeMs challenge_window_start_ = 0;
  int challenge_in_window_ = 0;
  std::size_t challenge_acks_ = 0;
};

/// Victim-side TCP client with one connection and a periodic request loop.
class ClientEndpoint {
 public:
  ClientEndpoint(SockAddr local, SockAddr server, AppModel app, TrafficModel traffic,
                 std::uint64_t seed);

  TcpSegment connect(TimeMs now);
  std::vector<TcpSegment> handle(const TcpSegment& seg, TimeMs now);
  /// One application request, or nothing when not Established.
  std::vector<TcpSegment> tick(TimeMs now);

  const TcpEndpointConn& conn() const { return conn_; }
  const TrafficModel& traffic() const { return traffic_; }
  bool logs_in() const { return login_on_connect_; }
  void set_login_on_connect(bool v) { login_on_connect_ = v; }
  bool request_outstanding() const { return outstanding_; }

  struct Displayed {
    TimeMs at;
    std::string tag;
  };
  const std::vector<Displayed>& displayed() const { return displayed_; }
  std::size_t requests_sent() const { return requests_sent_; }

 private:
  TcpSegment make(TcpFlags flags, std::string_view tag = {}) const;
  TcpSegment request(std::string_view tag);

  TcpEndpointConn conn_;
  TrafficModel traffic_;
  std::mt19937_64 rng_;
  bool login_on_connect_ = true;
  bool outstanding_ = false;
  std::vector<Displayed> displayed_;
  std::size_t requests_sent_ = 0;
};

}  // namespace nathijack
