#include <doctest.h>

#include <algorithm>

#include "mtd/adversary.hpp"
#include "mtd/environment.hpp"
#include "mtd/error.hpp"
#include "mtd/ip_shuffle.hpp"
#include "support.hpp"

using namespace mtd;

TEST_CASE("empty /24 environment") {
  EnvironmentSpec spec;
  spec.network.cidr = "192.168.1.0/24";
  auto env = test::make_env(spec);
  CHECK(env.subnet().host_count() == 254);
  CHECK(env.file_count() == 0);
  CHECK(env.list_processes().empty());
}

TEST_CASE("300 MB of pdf under /data") {
  auto env = test::make_env(test::files_spec("/data", 300, 300'000'000, {".pdf"}, 3, 2));
  CHECK(env.total_file_bytes("/data") == 300'000'000);
  CHECK(env.file_count() == 300);
  for (const auto& p : env.file_paths()) CHECK(extension_of(p) == ".pdf");
}

TEST_CASE("same spec and seed give identical digests") {
  auto spec = test::files_spec("/home", 50, 5'000'000, {".pdf", ".txt"}, 2, 3, 9);
  spec.processes.push_back({"sshd", 1.0, true});
  CHECK(test::make_env(spec).state_digest() == test::make_env(spec).state_digest());
}

TEST_CASE("process listing is ordered by pid") {
  auto env = test::make_env();
  const int a = env.spawn_process("busy", 90.0);
  const int b = env.spawn_process("idle", 2.0);
  auto procs = env.list_processes();
  REQUIRE(procs.size() == 2);
  CHECK(procs[0].pid < procs[1].pid);
  CHECK(std::min(a, b) == procs[0].pid);
}

TEST_CASE("running encryptor shows up above the cpu floor") {
  auto env = test::make_env(test::files_spec("/home", 40, 400'000));
  Encryptor enc({});
  run_adversaries(env, {&enc}, 2.0);
  auto procs = env.list_processes();
  auto it = std::find_if(procs.begin(), procs.end(), [](const auto& p) { return p.name == "cryptor"; });
  REQUIRE(it != procs.end());
  CHECK(it->cpu_percent >= 10.0);
  CHECK(it->files_opened_last_minute > 0);
}

TEST_CASE("killed encryptor stops encrypting") {
  auto env = test::make_env(test::files_spec("/home", 400, 4'000'000));
  Encryptor enc({});
  run_adversaries(env, {&enc}, 3.0);
  REQUIRE(enc.encryptor_stats().pid != 0);
  CHECK(env.kill_process(enc.encryptor_stats().pid) == KillResult::Killed);
  CHECK_FALSE(env.is_alive(enc.encryptor_stats().pid));
  const auto before = std::count_if(env.audit_log().begin(), env.audit_log().end(), [](const auto& e) { return e.op == "encrypt"; });
  run_adversaries(env, {&enc}, 13.0);
  const auto after = std::count_if(env.audit_log().begin(), env.audit_log().end(), [](const auto& e) { return e.op == "encrypt"; });
  CHECK(after == before);
  CHECK(enc.encryptor_stats().killed);
}

TEST_CASE("kill edge cases") {
  EnvironmentSpec spec;
  spec.processes.push_back({"sensor", 50.0, true});
  auto env = test::make_env(spec);
  CHECK(env.kill_process(999) == KillResult::NoSuchProcess);
  CHECK(env.kill_process(env.list_processes().front().pid) == KillResult::RefusedWhitelisted);
  CHECK(env.is_alive(env.list_processes().front().pid));
}

TEST_CASE("active host scan") {
  SUBCASE("no peers") {
    auto env = test::make_env();
    auto hosts = env.scan_active_hosts();
    CHECK(hosts.size() == 2);
    CHECK(std::count(hosts.begin(), hosts.end(), env.device_ip()) == 1);
    CHECK(std::count(hosts.begin(), hosts.end(), env.gateway_ip()) == 1);
  }
  SUBCASE("three peers") {
    EnvironmentSpec spec;
    spec.network.peers = {"192.168.1.10", "192.168.1.11", "192.168.1.12"};
    CHECK(test::make_env(spec).scan_active_hosts().size() == 5);
  }
  SUBCASE("after a migration") {
    auto env = test::make_env();
    Rng rng(4);
    auto r = migrate(env, rng);
    auto hosts = env.scan_active_hosts();
    CHECK(std::count(hosts.begin(), hosts.end(), r.old_ip) == 0);
    CHECK(std::count(hosts.begin(), hosts.end(), r.new_ip) == 1);
  }
}

TEST_CASE("ip assignment") {
  auto env = test::make_env();
  CHECK(env.assign_ip(*Ipv4Address::parse("192.168.1.77")) == AssignResult::Assigned);
  CHECK(env.device_ip().to_string() == "192.168.1.77");
  CHECK(env.assign_ip(env.gateway_ip()) == AssignResult::Collision);
  CHECK(env.assign_ip(*Ipv4Address::parse("10.0.0.5")) == AssignResult::OutOfRange);
  CHECK(env.device_ip().to_string() == "192.168.1.77");
}

TEST_CASE("connectivity") {
  auto env = test::make_env();
  CHECK(env.check_connectivity());
  env.add_dead_address(env.device_ip());
  CHECK_FALSE(env.check_connectivity());

  SUBCASE("retry after a dead candidate") {
    EnvironmentSpec spec;
    spec.network.cidr = "10.0.0.0/29";  // hosts .1-.6; gateway .1, device .2
    spec.network.peers = {"10.0.0.3", "10.0.0.4"};
    spec.network.dead = {"10.0.0.5"};
    auto small = test::make_env(spec);
    Rng rng(1);
    auto r = migrate(small, rng);
    CHECK(r.new_ip.to_string() == "10.0.0.6");
    CHECK(r.attempts >= 1);
    CHECK(small.check_connectivity());
  }
}

TEST_CASE("path helpers") {
  CHECK(join_path("/", "a") == "/a");
  CHECK(join_path("/a", "b") == "/a/b");
  CHECK(parent_path("/a/b") == "/a");
  CHECK(parent_path("/a") == "/");
  CHECK(base_name("/a/b.pdf") == "b.pdf");
  CHECK(extension_of("/a/b.tar.gz") == ".gz");
  CHECK(extension_of("/home/.profile").empty());
  CHECK(is_within("/a/b", "/a"));
  CHECK(is_within("/a", "/a"));
  CHECK_FALSE(is_within("/ab", "/a"));
}

TEST_CASE("clock never goes backwards") {
  auto env = test::make_env();
  env.advance_to(5.0);
  CHECK_THROWS_AS(env.advance_to(4.0), ClockError);
}

TEST_CASE("environment document parsing") {
  auto spec = parse_environment_spec(R"(
seed = 3
[network]
cidr = "10.1.0.0/24"
peers = ["10.1.0.9"]
[[files.roots]]
path = "/data"
count = 4
size_bytes = 4000
extensions = [".pdf"]
)");
  CHECK(spec.seed == 3);
  CHECK(spec.network.peers.size() == 1);
  REQUIRE(spec.files.size() == 1);
  CHECK(spec.files[0].count == 4);
  CHECK_THROWS_AS(parse_environment_spec("[network]\ncidr = \"10.1.0.0/24\"\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(SandboxEnvironment::create(parse_environment_spec("[network]\ncidr = \"10.1.0.0/33\"\n")), ConfigError);
}
