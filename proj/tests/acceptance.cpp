// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mtd/classifier.hpp"
#include "mtd/config.hpp"
#include "mtd/decision.hpp"
#include "mtd/error.hpp"
#include "mtd/file_format.hpp"
#include "mtd/framework.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/labels.hpp"
#include "mtd/log.hpp"
#include "mtd/scenario.hpp"
#include "support.hpp"

using namespace mtd;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = MTD_SOURCE_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { info += (info.empty() ? "" : ", ") + what; }
  std::string info;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioReport scenario(const std::string& name) { return run_scenario_file(kSource / "scenarios" / (name + ".toml")); }

// --- AC1 / AC2 ---------------------------------------------------------------

struct Trained {
  TrainingResult forest;
  TrainingResult tree;
  double forest_seconds = 0.0;
};

const Trained& trained() {
  static const Trained t = [] {
    auto cfg = load_framework_config(kSource / "configs" / "train_default.toml");
    Trained out;
    auto train = cfg.train;
    train.algo = Algorithm::Forest;
    const auto t0 = std::chrono::steady_clock::now();
    out.forest = run_training(train, cfg.seed);
    out.forest_seconds = seconds_since(t0);
    train.algo = Algorithm::Tree;
    out.tree = run_training(train, cfg.seed);
    return out;
  }();
  return t;
}

Verdict ac1() {
  Verdict v;
  const auto& t = trained();
  const double rf = t.forest.report.macro_f1, dt = t.tree.report.macro_f1;
  v.note("rf macro F1 " + fmt("%.3f", rf));
  v.note("tree macro F1 " + fmt("%.3f", dt));
  v.note("rf training " + fmt("%.1f", t.forest_seconds) + " s");
  v.require(t.forest.train_size + t.forest.test_size == 8 * 2160, "dataset is 8 x 2160");
  v.require(rf >= 0.95, "rf macro F1 >= 0.95");
  v.require(rf >= dt - 0.02, "rf >= tree - 0.02");
  v.require(t.forest_seconds < 60.0, "training under 60 s");
  return v;
}

Verdict ac2() {
  Verdict v;
  const auto& r = trained().forest.report;
  auto idx = [&](std::string_view name) {
    return static_cast<std::size_t>(std::find(r.classes.begin(), r.classes.end(), name) - r.classes.begin());
  };
  const auto leak = idx(labels::kDataLeakTheTick), normal = idx(labels::kNormal);
  const double confused = r.row_percent(leak, normal);
  v.note("dataleak -> normal " + fmt("%.1f", confused) + "%");
  v.require(confused >= 15.0 && confused <= 35.0, "dataleak confusion in [15, 35]%");
  double min_diag = 100.0;
  for (std::size_t c = 0; c < r.classes.size(); ++c)
    if (c != leak) min_diag = std::min(min_diag, r.row_percent(c, c));
  v.note("min other diagonal " + fmt("%.1f", min_diag) + "%");
  v.require(min_diag >= 90.0, "other diagonals >= 90%");
  return v;
}

// --- AC3 - AC6 ---------------------------------------------------------------

Verdict ac3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = scenario("ransomware_reactive");
  const double wall = seconds_since(t0);
  v.note("real loss " + fmt("%.1f", 100.0 * r.metric("ransomware.real_loss_ratio")) + "% of baseline");
  v.note("killed at t=" + fmt("%.0f", r.metric("ransomware.kill_observed_at_s")));
  v.note("wall " + fmt("%.2f", wall) + " s");
  v.require(r.check("ransomware.loss_within_10pct_of_baseline"), "loss <= 10% of baseline");
  v.require(r.check("ransomware.encryptor_killed"), "encryptor killed");
  v.require(r.check("ransomware.no_real_file_deleted"), "no real file deleted");
  v.require(wall < 10.0, "wall time < 10 s");
  return v;
}

Verdict ac4() {
  Verdict v;
  auto r = scenario("dataleak_reactive");
  v.note("leaked " + fmt("%.1f", r.metric("data_leak.bytes_leaked") / 1e6) + " MB");
  v.note(fmt("%.1f", 100.0 * r.metric("data_leak.leak_ratio")) + "% of tree");
  v.require(r.check("data_leak.leak_within_15pct"), "leak <= 15% of tree");
  v.require(r.check("data_leak.restore_name_identical"), "restore is name-identical");
  return v;
}

Verdict ac5() {
  Verdict v;
  auto cfg = load_framework_config(kSource / "scenarios" / "rootkit_proactive.toml");
  int ok = 0, idempotent = 0;
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    auto c = cfg;
    override_seed(c, s);
    auto r = run_scenario(c);
    ok += r.check("rootkit.disinfected_within_interval");
    idempotent += r.check("rootkit.sanitize_idempotent");
    worst = std::max(worst, r.metric("rootkit.disinfection_latency_s", 1e9));
  }
  v.note(std::to_string(ok) + "/100 cleared in time");
  v.note("worst latency " + fmt("%.1f", worst) + " s");
  v.require(ok == 100, "100/100 trials cleared within 60 s");
  v.require(idempotent == 100, "second sanitize pass unchanged");
  return v;
}

Verdict ac6() {
  Verdict v;
  auto r = scenario("botnet_reactive");
  v.note("delivered after migration " + fmt("%.0f", r.metric("botnet.delivered_after_migration", -1)));
  v.require(r.check("botnet.no_delivery_after_migration"), "zero deliveries after migration");
  v.require(r.check("botnet.migration_valid"), "scenario migration valid");

  Rng gen(6006);
  std::size_t violations = 0, migrated = 0, exhausted = 0;
  for (int i = 0; i < 1000; ++i) {
    const int prefix = 24 + static_cast<int>(gen.below(6));
    Subnet net(Ipv4Address{(10u << 24) | (static_cast<std::uint32_t>(gen.below(256)) << 16)}, prefix);
    EnvironmentSpec s;
    s.network.cidr = net.to_string();
    const auto hosts = net.host_count();
    std::set<std::uint32_t> used{net.first_host().value, net.first_host().value + 1};
    for (std::uint64_t k = 0, n = gen.below(hosts); k < n; ++k) {
      auto a = net.first_host().value + static_cast<std::uint32_t>(gen.below(hosts));
      if (used.insert(a).second) s.network.peers.push_back(Ipv4Address{a}.to_string());
    }
    std::set<Ipv4Address> dead;
    for (std::uint64_t k = 0, n = gen.below(hosts + 1); k < n; ++k)
      dead.insert(Ipv4Address{net.first_host().value + static_cast<std::uint32_t>(gen.below(hosts))});
    for (auto d : dead) s.network.dead.push_back(d.to_string());
    auto env = SandboxEnvironment::create(s);
    const auto old = env.device_ip();
    const auto active = env.scan_active_hosts();
    const auto candidates = test::brute_force_candidates(env);
    Rng rng(gen.next_u64());
    try {
      auto m = migrate(env, rng);
      ++migrated;
      const bool ok = m.new_ip != old && net.contains_host(m.new_ip) &&
                      std::find(active.begin(), active.end(), m.new_ip) == active.end() &&
                      m.attempts <= candidates && m.candidates == candidates && !dead.count(m.new_ip);
      violations += !ok;
    } catch (const ExhaustedError&) {
      ++exhausted;
      // Exhausted is only legitimate when no live candidate existed.
      std::size_t live = 0;
      for (std::uint64_t a = net.first_host().value; a <= net.last_host().value; ++a) {
        Ipv4Address ip{static_cast<std::uint32_t>(a)};
        if (ip == env.gateway_ip() || ip == old || dead.count(ip)) continue;
        if (std::find(active.begin(), active.end(), ip) != active.end()) continue;
        ++live;
      }
      violations += live != 0 || env.device_ip() != old;
    }
  }
  v.note("1000 random subnets: " + std::to_string(migrated) + " migrated, " + std::to_string(exhausted) +
         " exhausted, " + std::to_string(violations) + " violations");
  v.require(violations == 0, "migration invariants on 1000 cases");
  return v;
}

// --- AC7 ---------------------------------------------------------------------

bool extension_map_suite() {
  Rng rng(7001);
  for (int i = 0; i < 500; ++i) {
    const auto count = rng.below(50);
    auto env = test::make_env(test::files_spec("/data", count, count * 64 + 1, {".pdf", ".txt", ".jpg"},
                                               static_cast<unsigned>(rng.below(4)), static_cast<unsigned>(rng.below(4)),
                                               rng.next_u64()));
    const auto before = env.file_paths();
    auto map = shuffle_extensions(env, "/data", {".pdf", ".jpg"}, rng.next_u64());
    auto rep = restore_extensions(env, map);
    if (env.file_paths() != before || !rep.missing.empty() || !rep.conflicts.empty()) return false;
  }
  return true;
}

bool decoy_bound_suite() {
  Rng rng(7002);
  for (int i = 0; i < 100; ++i) {
    const auto count = 20 + rng.below(500);
    auto spec = test::files_spec("/home", count, count * (5'000 + rng.below(100'000)), {".pdf", ".doc"},
                                 1 + static_cast<unsigned>(rng.below(3)), static_cast<unsigned>(rng.below(5)),
                                 rng.next_u64());
    EncryptorParams ep;
    ep.target_exts = {".pdf", ".doc"};
    ep.rate_files_per_s = 1.0 + rng.uniform() * 30.0;
    ep.start_at = static_cast<double>(rng.below(10));
    TrapConfig tc;
    tc.dummy_files_per_dir = 1 + rng.below(40);
    tc.dummy_file_size = 512 * (1 + rng.below(128));
    tc.observation_s = 5 + static_cast<double>(rng.below(80));
    auto r = test::run_trap_case(spec, ep, tc, ep.start_at + static_cast<double>(rng.below(10)), 120);
    if (!r.bound_held || r.real_removed != 0 || r.writes_into_begun_dirs != 0) return false;
  }
  return true;
}

bool proactive_count_suite() {
  Rng rng(7003);
  for (int i = 0; i < 1000; ++i) {
    const double interval = 0.25 + rng.uniform() * 120.0;
    const double T = rng.uniform() * 3000.0;
    ProactiveRule rule;
    rule.id = "r";
    rule.every_s = interval;
    rule.mtds = {"libraries"};
    DecisionEngine e({rule});
    std::size_t n = 0;
    for (double t = 0; t < T;) {
      t = std::min(T, t + 0.05 + rng.uniform() * 10.0);
      n += e.tick(t).size();
    }
    if (n != static_cast<std::size_t>(std::floor(T / interval))) return false;
  }
  return true;
}

bool model_roundtrip_suite() {
  auto data = generate_dataset(default_profiles(), 40, 7004);
  auto scaler = minmax_fit(data);
  auto scaled = minmax_apply(scaler, data);
  ForestParams fp;
  fp.n_trees = 25;
  Rng rng(7005);
  for (const Model& m : {Model(train_forest(scaled, fp, 1)), Model(train_tree(scaled)), Model(train_knn(scaled, 5))}) {
    auto back = deserialize_model(serialize_model(m));
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> x(m.n_features());
      for (auto& f : x) f = rng.uniform() * 1.4 - 0.2;
      auto a = m.predict(x), b = back.predict(x);
      if (a.label != b.label || a.confidence != b.confidence) return false;
    }
  }
  return true;
}

bool dataset_io_suite() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto data = generate_dataset(default_profiles(), 10, seed);
    std::stringstream ss;
    write_dataset_csv(data, ss);
    auto back = read_dataset_csv(ss);
    if (back.vectors.size() != data.vectors.size()) return false;
    for (std::size_t i = 0; i < data.vectors.size(); ++i)
      if (back.vectors[i].features != data.vectors[i].features || back.vectors[i].label != data.vectors[i].label)
        return false;
    auto s = minmax_fit(data);
    if (!(scaler_from_json(scaler_to_json(s)) == s)) return false;
  }
  return true;
}

Verdict ac7() {
  Verdict v;
  const std::vector<std::pair<std::string, std::function<bool()>>> suites{
      {"extension map round trip (500)", extension_map_suite},
      {"decoy bound on random trap runs (100)", decoy_bound_suite},
      {"proactive count floor(T/interval) (1000)", proactive_count_suite},
      {"model save/load equality (3 x 1000 probes)", model_roundtrip_suite},
      {"dataset/scaler export-import (20)", dataset_io_suite},
  };
  for (const auto& [name, fn] : suites) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      v.require(false, name + " threw " + e.what());
      continue;
    }
    v.require(ok, name);
    if (ok) v.note(name);
  }
  return v;
}

// --- AC8 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict ac8() {
  Verdict v;
  const fs::path tmp = fs::temp_directory_path() / "mtd_acceptance";
  fs::create_directories(tmp);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kSource / "scenarios"))
    if (e.path().extension() == ".toml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const std::string cli = MTDCTL_PATH;
  for (const auto& f : files) {
    std::string a, b;
    if (!cli.empty()) {
      for (int run = 0; run < 2; ++run) {
        const auto out = tmp / (f.stem().string() + "." + std::to_string(run) + ".json");
        const auto cmd = "\"" + cli + "\" simulate --scenario \"" + f.string() + "\" --seed 1234 --out \"" +
                         out.string() + "\" > /dev/null 2>&1";
        v.require(std::system(cmd.c_str()) == 0, "simulate " + f.stem().string() + " exited non-zero");
        (run == 0 ? a : b) = slurp(out);
      }
    } else {
      a = report_to_json(run_scenario_file(f, 1234));
      b = report_to_json(run_scenario_file(f, 1234));
    }
    v.require(!a.empty() && a == b, f.stem().string() + " reports identical");
  }
  v.note(std::to_string(files.size()) + " scenarios" + (cli.empty() ? " (in process)" : " via mtdctl"));
  fs::remove_all(tmp);
  return v;
}

}  // namespace

int main() {
  configure_logging("error");
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"AC1 classifier quality", ac1},      {"AC2 confusion shape", ac2},   {"AC3 ransomware scenario", ac3},
      {"AC4 data-leak scenario", ac4},      {"AC5 rootkit scenario", ac5},  {"AC6 botnet scenario", ac6},
      {"AC7 mechanism properties", ac7},    {"AC8 determinism", ac8},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::printf("%s %s", v.pass ? "PASS" : "FAIL", name);
    if (!v.info.empty()) std::printf(" (%s)", v.info.c_str());
    if (!v.detail.empty()) std::printf(" [%s]", v.detail.c_str());
    std::printf("\n");
    std::fflush(stdout);
  }
  return failed;
}
