#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace nathijack {

using TimeMs = std::int64_t;

// "2G" and "4G" of the 32-bit sequence space.
inline constexpr std::uint64_t kSeqSpace = 1ULL << 32;
inline constexpr std::uint32_t kHalfSeqSpace = 1U << 31;

enum class AddrScope { Private, CarrierGrade, Public };

/// IPv4 address. The scope is derived from the value, never stored.
struct IpAddr {
  std::uint32_t value = 0;

  constexpr IpAddr() = default;
  constexpr explicit IpAddr(std::uint32_t v) : value(v) {}
  constexpr IpAddr(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  /// Parses dotted-quad notation; throws std::invalid_argument on malformed input.
  static IpAddr parse(std::string_view text);
  std::string to_string() const;
  AddrScope scope() const;

  friend constexpr auto operator<=>(IpAddr, IpAddr) = default;
};

AddrScope classify_scope(IpAddr ip);
std::string_view to_string(AddrScope scope);

/// (address, port) pair; one side of a TCP flow.
struct SockAddr {
  IpAddr ip;
  std::uint16_t port = 0;

  std::string to_string() const;
  friend constexpr auto operator<=>(const SockAddr&, const SockAddr&) = default;
};

struct Subnet {
  IpAddr base;
  int prefix_len = 24;

  bool contains(IpAddr ip) const;
  static Subnet parse(std::string_view text);
  std::string to_string() const;
  friend constexpr bool operator==(const Subnet&, const Subnet&) = default;
};

enum TcpFlag : std::uint8_t {
  kSyn = 1U << 0,
  kAck = 1U << 1,
  kRst = 1U << 2,
  kPsh = 1U << 3,
  kFin = 1U << 4,
};

class TcpFlags {
 public:
  constexpr TcpFlags() = default;
  constexpr TcpFlags(std::uint8_t bits) : bits_(bits) {}  // NOLINT: implicit from TcpFlag masks

  constexpr bool has(TcpFlag f) const { return (bits_ & f) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  /// Pure ACK with no other control bit.
  constexpr bool bare_ack() const { return bits_ == kAck; }
  std::string to_string() const;

  friend constexpr bool operator==(TcpFlags, TcpFlags) = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Opaque application label carried instead of payload bytes.
class PayloadTag {
 public:
  static constexpr std::size_t kCapacity = 31;

  constexpr PayloadTag() = default;
  PayloadTag(std::string_view text);  // NOLINT: tags are written as literals everywhere

  std::string_view view() const { return {chars_.data(), len_}; }
  std::string str() const { return std::string(view()); }
  bool empty() const { return len_ == 0; }
  bool starts_with(std::string_view prefix) const { return view().starts_with(prefix); }

  friend bool operator==(const PayloadTag& a, const PayloadTag& b) { return a.view() == b.view(); }

 private:
  std::array<char, kCapacity> chars_{};
  std::uint8_t len_ = 0;
};

/// The only wire unit in the simulator.
struct TcpSegment {
  SockAddr src;
  SockAddr dst;
  TcpFlags flags;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t ttl = 64;
  std::uint32_t payload_len = 0;
  PayloadTag payload_tag;

  /// Checks the generator invariants: non-empty flags, RST excludes PSH,
  /// payload implies PSH, ttl >= 1.
  bool well_formed() const;
  std::string summary() const;
};

struct FiveTuple {
  // Protocol is always TCP; kept implicit.
  SockAddr src;
  SockAddr dst;

  static FiveTuple of(const TcpSegment& seg) { return {seg.src, seg.dst}; }
  FiveTuple reversed() const { return {dst, src}; }
  friend constexpr auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

/// Liberal window predicate: (seq - base) mod 2^32 < 2^31.
constexpr bool seq_in_halfspace(std::uint32_t seq, std::uint32_t base) {
  return static_cast<std::uint32_t>(seq - base) < kHalfSeqSpace;
}

/// The other member of an RST pair: (x + 2^31) mod 2^32.
constexpr std::uint32_t seq_opposite(std::uint32_t x) { return x + kHalfSeqSpace; }

constexpr std::uint32_t seq_add(std::uint32_t a, std::uint64_t n) {
  return static_cast<std::uint32_t>(a + n);
}

}  // namespace nathijack
