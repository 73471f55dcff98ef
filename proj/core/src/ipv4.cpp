#include "mtd/ipv4.hpp"

#include <charconv>

#include "mtd/error.hpp"

namespace mtd {

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || next == p || part > 255 || next - p > 3) return std::nullopt;
    value = (value << 8) | part;
    p = next;
  }
  if (p != end) return std::nullopt;
  return Ipv4Address{value};
}

Ipv4Address Ipv4Address::parse_or_throw(std::string_view text, std::string_view what) {
  auto addr = parse(text);
  if (!addr) throw ConfigError("invalid IPv4 address for " + std::string(what) + ": '" + std::string(text) + "'");
  return *addr;
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

Subnet::Subnet(Ipv4Address network, int prefix) : network_(network), prefix_(prefix) {
  if (prefix < 0 || prefix > 32) throw ConfigError("invalid prefix length " + std::to_string(prefix));
  if ((network.value & ~mask()) != 0)
    throw ConfigError("network address " + network.to_string() + " has host bits set for /" + std::to_string(prefix));
}

Subnet Subnet::parse(std::string_view cidr) {
  auto slash = cidr.find('/');
  if (slash == std::string_view::npos) throw ConfigError("invalid CIDR '" + std::string(cidr) + "': missing prefix length");
  auto addr = Ipv4Address::parse(cidr.substr(0, slash));
  if (!addr) throw ConfigError("invalid CIDR '" + std::string(cidr) + "': bad network address");
  auto rest = cidr.substr(slash + 1);
  int prefix = -1;
  auto [next, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), prefix);
  if (ec != std::errc{} || next != rest.data() + rest.size() || rest.empty() || prefix < 0 || prefix > 32)
    throw ConfigError("invalid CIDR '" + std::string(cidr) + "': bad prefix length");
  return Subnet(*addr, prefix);
}

std::uint32_t Subnet::mask() const {
  return prefix_ == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_);
}

Ipv4Address Subnet::broadcast() const { return Ipv4Address{network_.value | ~mask()}; }

Ipv4Address Subnet::first_host() const {
  return prefix_ >= 31 ? network_ : Ipv4Address{network_.value + 1};
}

Ipv4Address Subnet::last_host() const {
  return prefix_ >= 31 ? broadcast() : Ipv4Address{broadcast().value - 1};
}

std::uint64_t Subnet::host_count() const {
  const std::uint64_t size = std::uint64_t{1} << (32 - prefix_);
  return prefix_ >= 31 ? size : size - 2;
}

bool Subnet::contains(Ipv4Address addr) const { return (addr.value & mask()) == network_.value; }

bool Subnet::contains_host(Ipv4Address addr) const {
  return contains(addr) && addr >= first_host() && addr <= last_host();
}

std::string Subnet::to_string() const { return network_.to_string() + '/' + std::to_string(prefix_); }

}  // namespace mtd
