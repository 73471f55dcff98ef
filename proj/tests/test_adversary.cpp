#include <doctest.h>

#include <algorithm>

#include "mtd/adversary.hpp"
#include "mtd/error.hpp"
#include "support.hpp"

using namespace mtd;

TEST_CASE("encryptor over an empty tree") {
  auto env = test::make_env();
  env.make_directory("/home");
  Encryptor enc({});
  run_adversaries(env, {&enc}, 100);
  CHECK(enc.encryptor_stats().files_encrypted == 0);
}

TEST_CASE("unprotected encryptor throughput") {
  auto env = test::make_env(test::files_spec("/home", 1200, 120'000'000, {".pdf"}, 2, 5));
  Encryptor enc({});
  run_adversaries(env, {&enc}, 200);
  const auto& s = enc.encryptor_stats();
  // rate * runtime files of mean size 100 kB
  CHECK(s.files_encrypted == 840);
  CHECK(s.bytes_encrypted == 840ull * 100'000);
  CHECK_FALSE(s.killed);
  std::size_t flagged = 0;
  for (const auto& p : env.file_paths()) flagged += env.stat(p)->encrypted;
  CHECK(flagged == 840);
}

TEST_CASE("encryptor walks depth first in name order and stays in its root") {
  EnvironmentSpec spec = test::files_spec("/home", 40, 4000, {".pdf", ".txt"}, 2, 2);
  spec.files.push_back({"/srv", 10, 1000, {".pdf"}, 0, 0});
  auto env = test::make_env(spec);
  Encryptor enc({});
  run_adversaries(env, {&enc}, 100);
  const auto& paths = enc.encryptor_stats().encrypted_paths;
  CHECK(paths.size() == 20);
  for (const auto& p : paths) {
    CHECK(p.rfind("/home/", 0) == 0);
    CHECK(extension_of(p) == ".pdf");
  }
  // Files of a directory come before anything in its subdirectories.
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const auto a = parent_path(paths[i - 1]), b = parent_path(paths[i]);
    if (a == b) CHECK(paths[i - 1] < paths[i]);
  }
}

TEST_CASE("killed encryptor stops") {
  auto env = test::make_env(test::files_spec("/home", 100, 100'000));
  Encryptor enc({});
  run_adversaries(env, {&enc}, 2);
  const auto done = enc.encryptor_stats().files_encrypted;
  CHECK(env.kill_process(enc.encryptor_stats().pid) == KillResult::Killed);
  run_adversaries(env, {&enc}, 50);
  CHECK(enc.encryptor_stats().killed);
  CHECK(enc.encryptor_stats().files_encrypted == done);
}

TEST_CASE("exfiltrator leak volume") {
  auto env = test::make_env(test::files_spec("/data", 300, 300'000'000, {".pdf"}, 3, 2));
  Exfiltrator ex({});
  run_adversaries(env, {&ex}, 500);
  CHECK(ex.leak_stats().bytes_leaked == 200'000ull * 112);

  auto small = test::make_env(test::files_spec("/data", 4, 1'000'000));
  Exfiltrator all({});
  run_adversaries(small, {&all}, 500);
  CHECK(all.leak_stats().bytes_leaked == 1'000'000);
  CHECK(all.leak_stats().files_completed == 4);

  auto empty = test::make_env();
  empty.make_directory("/data");
  Exfiltrator none({});
  run_adversaries(empty, {&none}, 500);
  CHECK(none.leak_stats().bytes_leaked == 0);
}

TEST_CASE("exfiltrator skips files whose extension changed") {
  auto env = test::make_env(test::files_spec("/data", 10, 10'000'000));
  Exfiltrator ex({});
  run_adversaries(env, {&ex}, 0.5);  // lists /data, starts the first file
  const auto files = env.file_paths();
  for (std::size_t i = 1; i < files.size(); ++i) env.rename(files[i], files[i] + ".x");
  run_adversaries(env, {&ex}, 500);
  CHECK(ex.leak_stats().bytes_leaked == 1'000'000);
  CHECK(ex.leak_stats().files_touched == 1);
}

TEST_CASE("rootkit tampering and hiding") {
  EnvironmentSpec spec;
  spec.linker.enabled = true;
  auto env = test::make_env(spec);
  const auto expected = spec.linker.preload_content;
  CHECK_FALSE(preload_tampered(env, expected));
  CHECK_FALSE(linker_tampered(env));
  Rootkit rk({});
  run_adversaries(env, {&rk}, 1);
  CHECK(preload_tampered(env, expected));
  CHECK(linker_tampered(env));
  CHECK(env.hiding_active());
  auto listing = env.list_dir("/var/tmp");
  CHECK(std::none_of(listing.begin(), listing.end(), [](const DirEntry& e) { return e.name.rfind("beurk", 0) == 0; }));
  CHECK(rk.tamper_stats().injections == 1);

  const auto digest = env.state_digest();
  rk.inject(env);
  CHECK(env.state_digest() == digest);
}

TEST_CASE("rootkit needs the linker model") {
  auto env = test::make_env();
  Rootkit rk({});
  CHECK_THROWS_AS(rk.inject(env), ConfigError);
}

TEST_CASE("botnet beacon counts") {
  auto env = test::make_env();
  Botnet bot({});
  run_adversaries(env, {&bot}, 100);
  CHECK(bot.beacon_stats().sent == 21);
  CHECK(bot.beacon_stats().delivered == 21);

  BotnetParams p;
  p.beacon_interval_s = 100;
  p.duration_s = 42;
  Botnet sparse(p);
  auto env2 = test::make_env();
  run_adversaries(env2, {&sparse}, 100);
  CHECK(sparse.beacon_stats().sent == 1);

  BotnetParams late;
  late.start_at = 500;
  Botnet never(late);
  auto env3 = test::make_env();
  run_adversaries(env3, {&never}, 100);
  CHECK(never.beacon_stats().sent == 0);
}

TEST_CASE("botnet leaves the file tree alone") {
  auto env = test::make_env(test::files_spec("/data", 10, 1000));
  auto untouched = env;
  Botnet bot({});
  run_adversaries(env, {&bot}, 100);
  untouched.advance_to(env.now());
  CHECK(env.state_digest() == untouched.state_digest());
}

TEST_CASE("adversaries are deterministic") {
  auto run = [] {
    auto env = test::make_env(test::files_spec("/home", 200, 2'000'000, {".pdf"}, 2, 3, 5));
    Encryptor enc({});
    Botnet bot({});
    run_adversaries(env, {&enc, &bot}, 60);
    return env.state_digest();
  };
  CHECK(run() == run());
}
