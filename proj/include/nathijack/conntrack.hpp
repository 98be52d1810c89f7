#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nathijack/packet.hpp"

namespace nathijack {

enum class PortStrategy { Preservation, RandomSelection, SequentialSelection, PortOverloading };

/// NoCheck behaves like OpenWrt's no_window_check, Liberal2G like AsusWrt's
/// be_liberal (half-space comparison), Strict is full window tracking.
enum class WindowTrackingMode { NoCheck, Liberal2G, Strict };

enum class MappingState { Established, Close };

std::string_view to_string(PortStrategy s);
std::string_view to_string(WindowTrackingMode m);
std::string_view to_string(MappingState s);
PortStrategy parse_port_strategy(std::string_view text);
WindowTrackingMode parse_window_mode(std::string_view text);

inline constexpr std::uint16_t kPortPoolFirst = 1024;
inline constexpr std::uint16_t kPortPoolLast = 65535;
inline constexpr std::uint32_t kPortPoolSize = kPortPoolLast - kPortPoolFirst + 1;
inline constexpr std::uint32_t kStrictWindow = 65535;
inline constexpr TimeMs kDefaultEstablishedTimeoutMs = 7'440'000;  // 2 h 4 min
inline constexpr TimeMs kDefaultCloseTimeoutMs = 10'000;

using MappingId = std::uint64_t;

struct NatMapping {
  MappingId id = 0;
  SockAddr internal;
  SockAddr external;
  SockAddr remote;
  MappingState state = MappingState::Established;
  TimeMs expires_at = 0;
  // Strict mode only: next expected sequence number per direction.
  std::optional<std::uint32_t> tracked_seq;  // remote -> internal
  std::optional<std::uint32_t> tracked_ack;  // internal -> remote
  // Base for the liberal half-space check.
  std::optional<std::uint32_t> last_inbound_seq;

  bool live_at(TimeMs now) const { return now < expires_at; }
  FiveTuple original_tuple() const { return {internal, remote}; }
};

struct ConntrackConfig {
  PortStrategy strategy = PortStrategy::Preservation;
  WindowTrackingMode window_mode = WindowTrackingMode::NoCheck;
  TimeMs close_timeout_ms = kDefaultCloseTimeoutMs;
  TimeMs established_timeout_ms = kDefaultEstablishedTimeoutMs;
  IpAddr external_ip;
  std::uint64_t rng_seed = 0;
};

class PortPoolExhausted : public std::runtime_error {
 public:
  explicit PortPoolExhausted(const SockAddr& remote)
      : std::runtime_error("no unused external port toward " + remote.to_string()) {}
};

/// The router's NAT table.
///
/// Lookups by internal tuple and by (external port, remote) are hash-indexed.
/// Expired entries stop matching immediately and are physically removed by
/// purge_expired(), which the simulation calls whenever virtual time advances.
class ConntrackTable {
 public:
  explicit ConntrackTable(ConntrackConfig config);

  const ConntrackConfig& config() const { return config_; }

  /// Creates a mapping for an outbound segment that matched nothing.
  /// Throws PortPoolExhausted, or std::logic_error if a live mapping exists
  /// or the segment carries none of SYN/PSH/ACK.
  const NatMapping& allocate(const TcpSegment& seg, TimeMs now);

  const NatMapping* lookup_outbound(const TcpSegment& seg, TimeMs now) const;
  const NatMapping* lookup_inbound(const TcpSegment& seg, TimeMs now) const;

  bool window_accepts(const NatMapping& mapping, const TcpSegment& seg) const;

  /// State and timer update for a segment that passed window_accepts.
  const NatMapping& apply_transition(MappingId id, const TcpSegment& seg, TimeMs now);

  std::size_t purge_expired(TimeMs now);

  const NatMapping* find(MappingId id) const;
  std::size_t size() const { return entries_.size(); }
  /// All entries ordered by original tuple, for deterministic inspection.
  std::vector<NatMapping> snapshot() const;

 private:
  struct InternalKey {
    SockAddr internal;
    SockAddr remote;
    friend bool operator==(const InternalKey&, const InternalKey&) = default;
  };
  struct InternalKeyHash {
    std::size_t operator()(const InternalKey& k) const noexcept;
  };

  static std::uint64_t pack(const SockAddr& a) {
    return (std::uint64_t{a.ip.value} << 16) | a.port;
  }
  static std::uint64_t external_key(std::uint16_t port, const SockAddr& remote) {
    return (pack(remote) << 16) | port;
  }

  bool port_in_use(std::uint16_t port, const SockAddr& remote, TimeMs now);
  std::uint16_t random_unused_port(const SockAddr& remote, TimeMs now);
  std::uint16_t sequential_port(const SockAddr& remote, TimeMs now);
  void erase(MappingId id);
  void schedule_expiry(const NatMapping& m);
  bool inbound(const NatMapping& m, const TcpSegment& seg) const { return seg.src == m.remote; }

  ConntrackConfig config_;
  std::mt19937_64 rng_;
  MappingId next_id_ = 1;
  std::unordered_map<MappingId, NatMapping> entries_;
  std::unordered_map<InternalKey, MappingId, InternalKeyHash> by_internal_;
  std::unordered_map<std::uint64_t, MappingId> by_external_;
  std::map<SockAddr, std::uint16_t> sequential_last_;
  using ExpiryEntry = std::pair<TimeMs, MappingId>;
  std::priority_queue<ExpiryEntry, std::vector<ExpiryEntry>, std::greater<>> expiry_;
};

}  // namespace nathijack
