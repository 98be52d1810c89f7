#include "nathijack/conntrack.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace nathijack {

std::string_view to_string(PortStrategy s) {
  switch (s) {
    case PortStrategy::Preservation: return "Preservation";
    case PortStrategy::RandomSelection: return "RandomSelection";
    case PortStrategy::SequentialSelection: return "SequentialSelection";
    case PortStrategy::PortOverloading: return "PortOverloading";
  }
  return "?";
}

std::string_view to_string(WindowTrackingMode m) {
  switch (m) {
    case WindowTrackingMode::NoCheck: return "NoCheck";
    case WindowTrackingMode::Liberal2G: return "Liberal2G";
    case WindowTrackingMode::Strict: return "Strict";
  }
  return "?";
}

std::string_view to_string(MappingState s) {
  return s == MappingState::Established ? "Established" : "Close";
}

PortStrategy parse_port_strategy(std::string_view text) {
  for (auto s : {PortStrategy::Preservation, PortStrategy::RandomSelection,
                 PortStrategy::SequentialSelection, PortStrategy::PortOverloading}) {
    if (text == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown port strategy: " + std::string(text));
}

WindowTrackingMode parse_window_mode(std::string_view text) {
  for (auto m : {WindowTrackingMode::NoCheck, WindowTrackingMode::Liberal2G,
                 WindowTrackingMode::Strict}) {
    if (text == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown window mode: " + std::string(text));
}

std::size_t ConntrackTable::InternalKeyHash::operator()(const InternalKey& k) const noexcept {
  const std::uint64_t a = pack(k.internal);
  const std::uint64_t b = pack(k.remote);
  return std::hash<std::uint64_t>{}(a * 0x9E3779B97F4A7C15ULL ^ (b + 0x632BE59BD9B4E019ULL));
}

ConntrackTable::ConntrackTable(ConntrackConfig config) : config_(config), rng_(config.rng_seed) {
  if (config_.close_timeout_ms <= 0 || config_.established_timeout_ms < config_.close_timeout_ms) {
    throw std::invalid_argument("conntrack timeouts must satisfy 0 < close <= established");
  }
}

const NatMapping* ConntrackTable::find(MappingId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

void ConntrackTable::erase(MappingId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  const NatMapping& m = it->second;
  by_internal_.erase(InternalKey{m.internal, m.remote});
  by_external_.erase(external_key(m.external.port, m.remote));
  entries_.erase(it);
}

bool ConntrackTable::port_in_use(std::uint16_t port, const SockAddr& remote, TimeMs now) {
  auto it = by_external_.find(external_key(port, remote));
  if (it == by_external_.end()) return false;
  if (entries_.at(it->second).live_at(now)) return true;
  erase(it->second);
  return false;
}

std::uint16_t ConntrackTable::random_unused_port(const SockAddr& remote, TimeMs now) {
  std::uniform_int_distribution<std::uint32_t> pick(kPortPoolFirst, kPortPoolLast);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto port = static_cast<std::uint16_t>(pick(rng_));
    if (!port_in_use(port, remote, now)) return port;
  }
  // Nearly full pool: walk it from a random start.
  const std::uint32_t start = pick(rng_) - kPortPoolFirst;
  for (std::uint32_t i = 0; i < kPortPoolSize; ++i) {
    const auto port = static_cast<std::uint16_t>(kPortPoolFirst + (start + i) % kPortPoolSize);
    if (!port_in_use(port, remote, now)) return port;
  }
  throw PortPoolExhausted(remote);
}

std::uint16_t ConntrackTable::sequential_port(const SockAddr& remote, TimeMs now) {
  auto it = sequential_last_.find(remote);
  if (it == sequential_last_.end()) {
    const std::uint16_t first = random_unused_port(remote, now);
    sequential_last_.emplace(remote, first);
    return first;
  }
  // Stride +1 within the pool, skipping ports still held toward this remote.
  std::uint32_t offset = it->second - kPortPoolFirst;
  for (std::uint32_t i = 0; i < kPortPoolSize; ++i) {
    offset = (offset + 1) % kPortPoolSize;
    const auto port = static_cast<std::uint16_t>(kPortPoolFirst + offset);
    if (!port_in_use(port, remote, now)) {
      it->second = port;
      return port;
    }
  }
  throw PortPoolExhausted(remote);
}

const NatMapping& ConntrackTable::allocate(const TcpSegment& seg, TimeMs now) {
  if (!(seg.flags.has(kSyn) || seg.flags.has(kPsh) || seg.flags.has(kAck))) {
    throw std::logic_error("only SYN, PSH or ACK segments create NAT mappings");
  }
  const InternalKey key{seg.src, seg.dst};
  if (auto it = by_internal_.find(key); it != by_internal_.end()) {
    if (entries_.at(it->second).live_at(now)) {
      throw std::logic_error("live mapping already exists for " + seg.src.to_string());
    }
    erase(it->second);
  }

  const SockAddr& remote = seg.dst;
  std::uint16_t port = seg.src.port;
  switch (config_.strategy) {
    case PortStrategy::Preservation:
      if (port < kPortPoolFirst || port_in_use(port, remote, now)) {
        port = random_unused_port(remote, now);
      }
      break;
    case PortStrategy::RandomSelection:
      port = random_unused_port(remote, now);
      break;
    case PortStrategy::SequentialSelection:
      port = sequential_port(remote, now);
      break;
    case PortStrategy::PortOverloading:
      if (auto it = by_external_.find(external_key(port, remote)); it != by_external_.end()) {
        erase(it->second);
      }
      break;
  }

  NatMapping m;
  m.id = next_id_++;
  m.internal = seg.src;
  m.external = SockAddr{config_.external_ip, port};
  m.remote = remote;
  m.state = MappingState::Established;
  m.expires_at = now + config_.established_timeout_ms;
  if (config_.window_mode == WindowTrackingMode::Strict) {
    m.tracked_ack = seq_add(seg.seq, seg.payload_len + (seg.flags.has(kSyn) ? 1 : 0));
    if (seg.flags.has(kAck)) m.tracked_seq = seg.ack;
  }

  by_internal_.emplace(key, m.id);
  by_external_[external_key(port, remote)] = m.id;
  auto [it, inserted] = entries_.emplace(m.id, m);
  schedule_expiry(it->second);
  return it->second;
}

const NatMapping* ConntrackTable::lookup_outbound(const TcpSegment& seg, TimeMs now) const {
  auto it = by_internal_.find(InternalKey{seg.src, seg.dst});
  if (it == by_internal_.end()) return nullptr;
  const NatMapping& m = entries_.at(it->second);
  return m.live_at(now) ? &m : nullptr;
}

const NatMapping* ConntrackTable::lookup_inbound(const TcpSegment& seg, TimeMs now) const {
  if (seg.dst.ip != config_.external_ip) return nullptr;
  auto it = by_external_.find(external_key(seg.dst.port, seg.src));
  if (it == by_external_.end()) return nullptr;
  const NatMapping& m = entries_.at(it->second);
  return m.live_at(now) ? &m : nullptr;
}

bool ConntrackTable::window_accepts(const NatMapping& mapping, const TcpSegment& seg) const {
  const bool in = inbound(mapping, seg);
  switch (config_.window_mode) {
    case WindowTrackingMode::NoCheck:
      return true;
    case WindowTrackingMode::Liberal2G:
      // Only the reply direction is compared, against the last seq seen there.
      if (!in || !mapping.last_inbound_seq) return true;
      return seq_in_halfspace(seg.seq, *mapping.last_inbound_seq);
    case WindowTrackingMode::Strict: {
      const auto& tracked = in ? mapping.tracked_seq : mapping.tracked_ack;
      if (!tracked) return true;
      return static_cast<std::uint32_t>(seg.seq - *tracked) <= kStrictWindow;
    }
  }
  return false;
}

const NatMapping& ConntrackTable::apply_transition(MappingId id, const TcpSegment& seg, TimeMs now) {
  NatMapping& m = entries_.at(id);
  const bool in = inbound(m, seg);
  if (seg.flags.has(kRst)) {
    m.state = MappingState::Close;
    m.expires_at = now + config_.close_timeout_ms;
  } else if (m.state == MappingState::Close) {
    m.expires_at = now + config_.close_timeout_ms;
  } else {
    m.expires_at = now + config_.established_timeout_ms;
  }
  if (in) m.last_inbound_seq = seg.seq;

  if (config_.window_mode == WindowTrackingMode::Strict) {
    auto& tracked = in ? m.tracked_seq : m.tracked_ack;
    // SYN consumes a sequence number only when it initialises the direction.
    if (!tracked) {
      tracked = seq_add(seg.seq, seg.payload_len + (seg.flags.has(kSyn) ? 1 : 0));
    } else {
      const std::uint32_t end = seq_add(seg.seq, seg.payload_len);
      if (seq_in_halfspace(end, *tracked)) tracked = end;
    }
  }
  schedule_expiry(m);
  return m;
}

void ConntrackTable::schedule_expiry(const NatMapping& m) { expiry_.emplace(m.expires_at, m.id); }

std::size_t ConntrackTable::purge_expired(TimeMs now) {
  std::size_t removed = 0;
  while (!expiry_.empty() && expiry_.top().first <= now) {
    const auto [at, id] = expiry_.top();
    expiry_.pop();
    auto it = entries_.find(id);
    // Stale heap entries (refreshed or already erased mappings) are skipped.
    if (it == entries_.end() || it->second.expires_at != at) continue;
    erase(id);
    ++removed;
  }
  return removed;
}

std::vector<NatMapping> ConntrackTable::snapshot() const {
  std::vector<NatMapping> out;
  out.reserve(entries_.size());
  for (const auto& [id, m] : entries_) out.push_back(m);
  std::sort(out.begin(), out.end(), [](const NatMapping& a, const NatMapping& b) {
    return std::tie(a.internal, a.remote, a.id) < std::tie(b.internal, b.remote, b.id);
  });
  return out;
}

}  // namespace nathijack
