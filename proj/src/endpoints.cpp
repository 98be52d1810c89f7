#include "nathijack/endpoints.hpp"

namespace nathijack {

std::string_view to_string(ConnState s) {
  switch (s) {
    case ConnState::SynSent: return "SynSent";
    case ConnState::SynReceived: return "SynReceived";
    case ConnState::Established: return "Established";
    case ConnState::Closed: return "Closed";
  }
  return "?";
}

std::string_view to_string(AppKind k) {
  switch (k) {
    case AppKind::Ssh: return "ssh";
    case AppKind::Ftp: return "ftp";
    case AppKind::Http: return "http";
  }
  return "?";
}

AppModel AppModel::ssh() { return AppModel{}; }

AppModel AppModel::ftp() {
  AppModel a;
  a.kind = AppKind::Ftp;
  a.files = {{std::string(kPrivateFile), "victim"}, {"readme.txt", "victim"}};
  return a;
}

AppModel AppModel::http() {
  AppModel a;
  a.kind = AppKind::Http;
  return a;
}

std::string AppModel::request_tag() const {
  switch (kind) {
    case AppKind::Ssh: return "ssh-cmd";
    case AppKind::Ftp: return "ftp-noop";
    case AppKind::Http: return "http-req";
  }
  return {};
}

std::uint16_t AppModel::default_port() const {
  switch (kind) {
    case AppKind::Ssh: return 22;
    case AppKind::Ftp: return 21;
    case AppKind::Http: return 80;
  }
  return 0;
}

std::string AppModel::respond(std::string_view request) {
  switch (kind) {
    case AppKind::Ssh:
      return "ssh-out";
    case AppKind::Http:
      return request == "http-req" ? payload_tag : "http-400";
    case AppKind::Ftp:
      if (request == "ftp-login") {
        session_authed = true;
        return "ftp-230";
      }
      if (request == "ftp-noop") return "ftp-200";
      if (request.starts_with("ftp-get:")) {
        const std::string file(request.substr(8));
        if (login_required && !session_authed) return "ftp-530";
        if (files.count(file) == 0) return "ftp-550";
        return "file:" + file;
      }
      return "ftp-500";
  }
  return {};
}

bool ftp_authorize(const AppModel& app, const TcpEndpointConn& conn, const std::string& file) {
  if (app.files.count(file) == 0) throw FileUnknown(file);
  if (conn.state != ConnState::Established) return false;
  return !app.login_required || app.session_authed;
}

TrafficModel TrafficModel::fixed(TimeMs interval_ms) {
  if (interval_ms <= 0) throw std::invalid_argument("traffic interval must be positive");
  return TrafficModel{interval_ms, interval_ms, 0};
}

TrafficModel TrafficModel::uniform(TimeMs lo_ms, TimeMs hi_ms) {
  if (lo_ms <= 0 || hi_ms < lo_ms) throw std::invalid_argument("bad traffic interval range");
  return TrafficModel{lo_ms, hi_ms, 0};
}

TimeMs TrafficModel::draw(std::mt19937_64& rng) const {
  if (interval_min_ms == interval_max_ms) return interval_min_ms;
  return std::uniform_int_distribution<TimeMs>(interval_min_ms, interval_max_ms)(rng);
}

namespace {

TcpSegment reply(const TcpEndpointConn& c, TcpFlags flags) {
  TcpSegment s;
  s.src = c.local;
  s.dst = c.peer;
  s.flags = flags;
  s.seq = c.snd_nxt;
  s.ack = c.rcv_nxt;
  return s;
}

std::uint32_t tag_len(std::string_view tag) { return static_cast<std::uint32_t>(tag.size()); }

}  // namespace

// ---------------------------------------------------------------- server

ServerEndpoint::ServerEndpoint(SockAddr listen, AppModel app, std::uint64_t seed)
    : listen_(listen), app_proto_(std::move(app)), rng_(seed) {}

std::uint32_t ServerEndpoint::fresh_isn() {
  for (;;) {
    const auto isn = static_cast<std::uint32_t>(rng_());
    if (used_isns_.insert(isn).second) return isn;
  }
}

const TcpEndpointConn* ServerEndpoint::find(const SockAddr& peer) const {
  auto it = conns_.find(peer);
  return it == conns_.end() ? nullptr : &it->second;
}

TcpSegment ServerEndpoint::reset_for(const TcpSegment& seg) {
  TcpSegment r;
  r.src = seg.dst;
  r.dst = seg.src;
  r.flags = TcpFlags(kRst | kAck);
  r.seq = seg.flags.has(kAck) ? seg.ack : 0;
  r.ack = seq_add(seg.seq, seg.payload_len + (seg.flags.has(kSyn) ? 1 : 0));
  return r;
}

std::optional<TcpSegment> ServerEndpoint::challenge_ack(const TcpEndpointConn& c, TimeMs now) {
  if (challenge_ack_limit_ > 0) {
    if (now - challenge_window_start_ >= 1000) {
      challenge_window_start_ = now;
      challenge_in_window_ = 0;
    }
    if (challenge_in_window_ >= challenge_ack_limit_) return std::nullopt;
    ++challenge_in_window_;
  }
  ++challenge_acks_;
  return reply(c, kAck);
}

std::vector<TcpSegment> ServerEndpoint::handle(const TcpSegment& seg, TimeMs now) {
  std::vector<TcpSegment> out;
  auto it = seg.dst == listen_ ? conns_.find(seg.src) : conns_.end();
  const bool live = it != conns_.end() && it->second.state != ConnState::Closed;

  if (!live) {
    if (seg.dst == listen_ && seg.flags.bits() == kSyn) {
      TcpEndpointConn c;
      c.local = listen_;
      c.peer = seg.src;
      c.app = app_proto_;
      const std::uint32_t isn = fresh_isn();
      c.rcv_nxt = seq_add(seg.seq, 1);
      c.snd_nxt = isn;
      c.state = ConnState::SynReceived;
      TcpSegment synack = reply(c, TcpFlags(kSyn | kAck));
      c.snd_nxt = seq_add(isn, 1);
      conns_.insert_or_assign(seg.src, std::move(c));
      out.push_back(synack);
    } else if (!seg.flags.has(kRst)) {
      out.push_back(reset_for(seg));
    }
    return out;
  }

  TcpEndpointConn& c = it->second;
  if (c.state == ConnState::SynReceived) {
    if (seg.flags.has(kRst)) {
      if (seg.seq == c.rcv_nxt) c.state = ConnState::Closed;
      return out;
    }
    if (seg.flags.has(kSyn) || !seg.flags.has(kAck) || seg.ack != c.snd_nxt) {
      if (auto ca = challenge_ack(c, now)) out.push_back(*ca);
      return out;
    }
    c.state = ConnState::Established;
  }

  if (seg.seq != c.rcv_nxt || seg.flags.has(kSyn)) {
    if (auto ca = challenge_ack(c, now)) out.push_back(*ca);
    return out;
  }
  if (seg.flags.has(kRst)) {
    c.state = ConnState::Closed;
    c.closed_by_rst = true;
    return out;
  }
  if (seg.payload_len > 0) {
    c.rcv_nxt = seq_add(c.rcv_nxt, seg.payload_len);
    const std::string response = c.app.respond(seg.payload_tag.view());
    TcpSegment r = reply(c, TcpFlags(kPsh | kAck));
    r.payload_tag = PayloadTag(response);
    r.payload_len = tag_len(response);
    c.snd_nxt = seq_add(c.snd_nxt, r.payload_len);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- client

ClientEndpoint::ClientEndpoint(SockAddr local, SockAddr server, AppModel app,
                               TrafficModel traffic, std::uint64_t seed)
    : traffic_(traffic), rng_(seed) {
  conn_.local = local;
  conn_.peer = server;
  conn_.app = std::move(app);
}

TcpSegment ClientEndpoint::make(TcpFlags flags, std::string_view tag) const {
  TcpSegment s = reply(conn_, flags);
  if (!tag.empty()) {
    s.payload_tag = PayloadTag(tag);
    s.payload_len = tag_len(tag);
  }
  return s;
}

TcpSegment ClientEndpoint::request(std::string_view tag) {
  TcpSegment s = make(TcpFlags(kPsh | kAck), tag);
  conn_.snd_nxt = seq_add(conn_.snd_nxt, s.payload_len);
  outstanding_ = true;
  ++requests_sent_;
  return s;
}

TcpSegment ClientEndpoint::connect(TimeMs) {
  const auto isn = static_cast<std::uint32_t>(rng_());
  conn_.snd_nxt = isn;
  conn_.rcv_nxt = 0;
  conn_.state = ConnState::SynSent;
  TcpSegment syn = make(kSyn);
  syn.ack = 0;
  conn_.snd_nxt = seq_add(isn, 1);
  return syn;
}

std::vector<TcpSegment> ClientEndpoint::tick(TimeMs) {
  if (conn_.state != ConnState::Established) return {};
  return {request(conn_.app.request_tag())};
}

std::vector<TcpSegment> ClientEndpoint::handle(const TcpSegment& seg, TimeMs now) {
  std::vector<TcpSegment> out;
  if (seg.dst != conn_.local || seg.src != conn_.peer) return out;

  switch (conn_.state) {
    case ConnState::Closed:
    case ConnState::SynReceived:
      return out;
    case ConnState::SynSent:
      if (seg.flags.has(kRst) && seg.flags.has(kAck) && seg.ack == conn_.snd_nxt) {
        conn_.state = ConnState::Closed;
        conn_.closed_by_rst = true;
      } else if (seg.flags.has(kSyn) && seg.flags.has(kAck) && seg.ack == conn_.snd_nxt) {
        conn_.rcv_nxt = seq_add(seg.seq, 1);
        conn_.state = ConnState::Established;
        out.push_back(make(kAck));
        if (login_on_connect_ && conn_.app.kind == AppKind::Ftp) out.push_back(request("ftp-login"));
      }
      return out;
    case ConnState::Established:
      break;
  }

  if (seg.flags.has(kSyn)) return out;
  if (seg.flags.has(kRst)) {
    if (static_cast<std::uint32_t>(seg.seq - conn_.rcv_nxt) < 65536U) {
      conn_.state = ConnState::Closed;
      conn_.closed_by_rst = true;
    }
    return out;
  }
  if (seg.payload_len > 0) {
    if (seg.seq == conn_.rcv_nxt && outstanding_) {
      conn_.rcv_nxt = seq_add(conn_.rcv_nxt, seg.payload_len);
      outstanding_ = false;
      displayed_.push_back({now, seg.payload_tag.str()});
    }
    return out;
  }
  // A bare ACK that does not describe the current state draws our own ACK.
  if (seg.flags.bare_ack() && (seg.seq != conn_.rcv_nxt || seg.ack != conn_.snd_nxt)) {
    out.push_back(make(kAck));
  }
  return out;
}

}  // namespace nathijack
