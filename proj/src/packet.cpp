#include "nathijack/packet.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace nathijack {

namespace {

std::uint32_t parse_octet(std::string_view part, std::string_view whole) {
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
  if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size() || v > 255) {
    throw std::invalid_argument("bad IPv4 address: " + std::string(whole));
  }
  return v;
}

}  // namespace

IpAddr IpAddr::parse(std::string_view text) {
  std::uint32_t value = 0;
  std::string_view rest = text;
  for (int i = 0; i < 4; ++i) {
    auto dot = rest.find('.');
    if ((i < 3) == (dot == std::string_view::npos)) {
      throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    }
    value = (value << 8) | parse_octet(rest.substr(0, dot), text);
    rest = i < 3 ? rest.substr(dot + 1) : std::string_view{};
  }
  return IpAddr{value};
}

std::string IpAddr::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (value >> 24) & 0xFF, (value >> 16) & 0xFF,
                (value >> 8) & 0xFF, value & 0xFF);
  return buf;
}

AddrScope IpAddr::scope() const { return classify_scope(*this); }

AddrScope classify_scope(IpAddr ip) {
  const std::uint32_t v = ip.value;
  if ((v >> 24) == 10) return AddrScope::Private;
  if ((v >> 20) == ((172U << 4) | 1U)) return AddrScope::Private;   // 172.16/12
  if ((v >> 16) == ((192U << 8) | 168U)) return AddrScope::Private;  // 192.168/16
  if ((v >> 22) == ((100U << 2) | 1U)) return AddrScope::CarrierGrade;  // 100.64/10
  return AddrScope::Public;
}

std::string_view to_string(AddrScope scope) {
  switch (scope) {
    case AddrScope::Private: return "private";
    case AddrScope::CarrierGrade: return "carrier-grade";
    case AddrScope::Public: return "public";
  }
  return "?";
}

std::string SockAddr::to_string() const { return ip.to_string() + ":" + std::to_string(port); }

bool Subnet::contains(IpAddr ip) const {
  if (prefix_len <= 0) return true;
  const std::uint32_t mask = prefix_len >= 32 ? 0xFFFFFFFFU : ~(0xFFFFFFFFU >> prefix_len);
  return (ip.value & mask) == (base.value & mask);
}

Subnet Subnet::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw std::invalid_argument("subnet needs a prefix length: " + std::string(text));
  }
  int len = 0;
  auto tail = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), len);
  if (ec != std::errc{} || ptr != tail.data() + tail.size() || len < 0 || len > 32) {
    throw std::invalid_argument("bad prefix length: " + std::string(text));
  }
  return Subnet{IpAddr::parse(text.substr(0, slash)), len};
}

std::string Subnet::to_string() const { return base.to_string() + "/" + std::to_string(prefix_len); }

std::string TcpFlags::to_string() const {
  std::string out;
  if (has(kSyn)) out += 'S';
  if (has(kAck)) out += 'A';
  if (has(kRst)) out += 'R';
  if (has(kPsh)) out += 'P';
  if (has(kFin)) out += 'F';
  return out.empty() ? "-" : out;
}

PayloadTag::PayloadTag(std::string_view text) {
  if (text.size() > kCapacity) {
    throw std::length_error("payload tag too long: " + std::string(text));
  }
  for (std::size_t i = 0; i < text.size(); ++i) chars_[i] = text[i];
  len_ = static_cast<std::uint8_t>(text.size());
}

bool TcpSegment::well_formed() const {
  if (flags.empty() || ttl == 0) return false;
  if (flags.has(kRst) && flags.has(kPsh)) return false;
  if (payload_len > 0 && !flags.has(kPsh)) return false;
  return true;
}

std::string TcpSegment::summary() const {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s>%s [%s] seq=%u ack=%u ttl=%u len=%u", src.to_string().c_str(),
                dst.to_string().c_str(), flags.to_string().c_str(), seq, ack, unsigned{ttl},
                payload_len);
  std::string out = buf;
  if (!payload_tag.empty()) {
    out += " tag=";
    out += payload_tag.view();
  }
  return out;
}

}  // namespace nathijack
