#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mtd {

struct Ipv4Address {
  std::uint32_t value = 0;

  static std::optional<Ipv4Address> parse(std::string_view text);
  /// Like parse() but throws ConfigError naming `what` on failure.
  static Ipv4Address parse_or_throw(std::string_view text, std::string_view what);
  std::string to_string() const;

  auto operator<=>(const Ipv4Address&) const = default;
};

/// IPv4 network in CIDR form. Host bits of the network address must be zero.
class Subnet {
 public:
  Subnet() = default;
  Subnet(Ipv4Address network, int prefix);

  /// Throws ConfigError on malformed input.
  static Subnet parse(std::string_view cidr);

  Ipv4Address network() const { return network_; }
  int prefix() const { return prefix_; }
  Ipv4Address broadcast() const;
  Ipv4Address first_host() const;
  Ipv4Address last_host() const;
  std::uint64_t host_count() const;

  /// True when `addr` is an assignable host address (network and broadcast
  /// excluded for prefixes up to /30).
  bool contains_host(Ipv4Address addr) const;
  bool contains(Ipv4Address addr) const;

  std::string to_string() const;

 private:
  std::uint32_t mask() const;

  Ipv4Address network_{};
  int prefix_ = 32;
};

}  // namespace mtd
