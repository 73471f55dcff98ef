#include <doctest.h>

#include <algorithm>
#include <set>

#include "mtd/adversary.hpp"
#include "mtd/error.hpp"
#include "mtd/ip_shuffle.hpp"
#include "support.hpp"

using namespace mtd;

namespace {

EnvironmentSpec net_spec(const std::string& cidr, std::vector<std::string> peers, std::vector<std::string> dead = {}) {
  EnvironmentSpec s;
  s.network.cidr = cidr;
  s.network.peers = std::move(peers);
  s.network.dead = std::move(dead);
  return s;
}

}  // namespace

TEST_CASE("candidates on a /24 with five active hosts") {
  auto env = test::make_env(net_spec("192.168.1.0/24", {"192.168.1.10", "192.168.1.11", "192.168.1.12"}));
  REQUIRE(env.scan_active_hosts().size() == 5);
  auto c = enumerate_candidates(env);
  CHECK(c.size() == test::brute_force_candidates(env));
  CHECK(c.size() == 249);
  CHECK(std::is_sorted(c.begin(), c.end()));
  CHECK(std::find(c.begin(), c.end(), env.device_ip()) == c.end());
}

TEST_CASE("fully occupied /30 is exhausted") {
  auto env = test::make_env(net_spec("10.0.0.0/30", {}));
  CHECK_THROWS_AS(enumerate_candidates(env), ExhaustedError);
  Rng rng(1);
  CHECK_THROWS_AS(migrate(env, rng), ExhaustedError);
}

TEST_CASE("migration with every candidate live takes one attempt") {
  auto env = test::make_env(net_spec("192.168.1.0/24", {"192.168.1.10"}));
  const auto old = env.device_ip();
  Rng rng(3);
  auto r = migrate(env, rng);
  CHECK(r.attempts == 1);
  CHECK(r.old_ip == old);
  CHECK(r.new_ip == env.device_ip());
  CHECK(r.new_ip != old);
  CHECK(env.check_connectivity());
}

TEST_CASE("dead first pick costs a second attempt") {
  // /29: hosts .1-.6, gateway .1, device .2, peers .3 .4 -> candidates .5 .6
  auto env = test::make_env(net_spec("10.0.0.0/29", {"10.0.0.3", "10.0.0.4"}, {"10.0.0.5"}));
  std::uint64_t seed = 0;
  for (;; ++seed) {  // a seed whose first pick is the dead address
    Rng r(seed);
    if (r.below(2) == 0) break;
  }
  Rng rng(seed);
  auto r = migrate(env, rng);
  CHECK(r.attempts == 2);
  CHECK(r.new_ip.to_string() == "10.0.0.6");
  CHECK(r.old_ip != r.new_ip);
}

TEST_CASE("all candidates dead restores the old address") {
  auto env = test::make_env(net_spec("10.0.0.0/29", {"10.0.0.3", "10.0.0.4"}, {"10.0.0.5", "10.0.0.6"}));
  const auto old = env.device_ip();
  Rng rng(1);
  CHECK_THROWS_AS(migrate(env, rng), ExhaustedError);
  CHECK(env.device_ip() == old);
}

TEST_CASE("migration invariants on random subnets") {
  Rng gen(77);
  for (int i = 0; i < 1000; ++i) {
    const int prefix = 24 + static_cast<int>(gen.below(6));  // /24 .. /29
    const std::uint32_t base = (10u << 24) | (static_cast<std::uint32_t>(gen.below(256)) << 16);
    Subnet net(Ipv4Address{base}, prefix);
    EnvironmentSpec s;
    s.network.cidr = net.to_string();
    std::set<std::uint32_t> used{net.first_host().value, net.first_host().value + 1};
    const auto hosts = net.host_count();
    for (std::uint64_t k = 0, n = gen.below(hosts); k < n; ++k) {
      auto v = net.first_host().value + static_cast<std::uint32_t>(gen.below(hosts));
      if (used.insert(v).second) s.network.peers.push_back(Ipv4Address{v}.to_string());
    }
    for (std::uint64_t k = 0, n = gen.below(hosts); k < n; ++k)
      s.network.dead.push_back(Ipv4Address{net.first_host().value + static_cast<std::uint32_t>(gen.below(hosts))}.to_string());
    auto env = SandboxEnvironment::create(s);
    const auto old = env.device_ip();
    const auto active = env.scan_active_hosts();
    const auto expected = test::brute_force_candidates(env);
    CAPTURE(i);
    CAPTURE(s.network.cidr);
    std::optional<std::vector<Ipv4Address>> cands;
    try {
      cands = enumerate_candidates(env);
    } catch (const ExhaustedError&) {
    }
    CHECK((cands ? cands->size() : 0) == expected);
    const bool any_live = cands && std::any_of(cands->begin(), cands->end(), [&](Ipv4Address a) {
      return std::find(s.network.dead.begin(), s.network.dead.end(), a.to_string()) == s.network.dead.end();
    });
    Rng rng(gen.next_u64());
    try {
      auto r = migrate(env, rng);
      CHECK(any_live);
      CHECK(r.new_ip != old);
      CHECK(net.contains_host(r.new_ip));
      CHECK(std::find(active.begin(), active.end(), r.new_ip) == active.end());
      CHECK(r.attempts <= expected);
      CHECK(env.check_connectivity());
    } catch (const ExhaustedError&) {
      CHECK_FALSE(any_live);
      CHECK(env.device_ip() == old);
    }
  }
}

TEST_CASE("migration is reproducible for a seed") {
  auto spec = net_spec("192.168.1.0/24", {}, {"192.168.1.100"});
  auto a = test::make_env(spec);
  auto b = test::make_env(spec);
  Rng ra(42), rb(42);
  CHECK(migrate(a, ra).new_ip == migrate(b, rb).new_ip);
}

TEST_CASE("botnet beacons stop reaching the C&C after migration") {
  auto env = test::make_env(net_spec("192.168.1.0/24", {"192.168.1.10"}));
  Botnet bot({});
  run_adversaries(env, {&bot}, 10);
  const auto before = bot.beacon_stats().delivered;
  CHECK(before > 0);
  IpShuffleMechanism m(env, {}, 1);
  m.start(Alarm::reactive("botnet_bashlite", 1, 10), 10);
  run_adversaries(env, {&bot}, 60);
  CHECK(bot.beacon_stats().delivered == before);
  auto out = m.stop(60);
  CHECK(out.metric("migrations") == 1);
}
