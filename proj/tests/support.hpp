#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mtd/adversary.hpp"
#include "mtd/classifier.hpp"
#include "mtd/environment.hpp"
#include "mtd/ransomware_trap.hpp"

namespace mtd::test {

inline EnvironmentSpec files_spec(const std::string& root, std::uint64_t count, std::uint64_t size_bytes,
                                  std::vector<std::string> exts = {".pdf"}, unsigned fanout = 0, unsigned depth = 0,
                                  std::uint64_t seed = 1) {
  EnvironmentSpec spec;
  spec.seed = seed;
  spec.files.push_back({root, count, size_bytes, std::move(exts), fanout, depth});
  return spec;
}

inline SandboxEnvironment make_env(const EnvironmentSpec& spec = {}) { return SandboxEnvironment::create(spec); }

// Depth-0 tree that always answers `cls`.
inline DecisionTreeModel constant_tree(const std::vector<std::string>& classes, std::size_t cls, std::size_t n_features) {
  DecisionTreeModel t;
  t.classes = classes;
  t.n_features = n_features;
  TreeNode leaf;
  leaf.histogram.assign(classes.size(), 0);
  leaf.histogram[cls] = 1;
  t.nodes.push_back(leaf);
  return t;
}

inline RandomForestModel voting_forest(const std::vector<std::string>& classes, const std::vector<std::size_t>& votes,
                                       std::size_t n_features) {
  RandomForestModel f;
  f.classes = classes;
  f.n_features = n_features;
  for (auto v : votes) {
    f.trees.push_back(constant_tree(classes, v, n_features));
    f.tree_seeds.push_back(f.trees.size());
  }
  return f;
}

struct TrapRun {
  std::uint64_t real_bytes = 0;
  std::uint64_t peak_decoy = 0;
  bool killed = false;
  bool bound_held = true;
  std::size_t real_removed = 0;
  std::size_t writes_into_begun_dirs = 0;
};

// Steps a trap against an encryptor at 1 s resolution, checking the decoy
// bound after every step. `deploy_at` < 0 runs without a trap.
inline TrapRun run_trap_case(const EnvironmentSpec& spec, const EncryptorParams& ep, const TrapConfig& tc,
                             double deploy_at, double until) {
  auto env = SandboxEnvironment::create(spec);
  Encryptor enc(ep);
  TrapMechanism mech(env, tc);
  TrapRun r;
  const auto bound = 2 * tc.dummy_files_per_dir * tc.dummy_file_size;
  for (double t = 0; t <= until; t += 1.0) {
    env.advance_to(t);
    if (deploy_at >= 0 && t == deploy_at) mech.start(Alarm::reactive("ransomware_poc", 1, t), t);
    if (mech.running()) mech.poll(t);
    if (mech.trap()) {
      r.peak_decoy = std::max(r.peak_decoy, mech.trap()->live_decoy_bytes());
      r.bound_held = r.bound_held && mech.trap()->live_decoy_bytes() <= bound;
    }
    run_adversaries(env, {&enc}, t + 1.0);
  }
  if (mech.running()) mech.stop(until);

  const auto& decoys = mech.decoy_history();
  const auto& dirs = mech.decoy_dir_history();
  std::map<std::string, std::size_t> first_encrypt;  // dir -> audit index
  const auto& log = env.audit_log();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (e.op == "encrypt") first_encrypt.emplace(parent_path(e.target), i);
    if (e.actor == "mtd:file_encryption" && e.op == "remove" && !decoys.count(e.target) && !dirs.count(e.target))
      ++r.real_removed;
    if (e.actor == "mtd:file_encryption" && e.op == "write") {
      auto it = first_encrypt.find(parent_path(e.target));
      if (it != first_encrypt.end() && it->second < i) ++r.writes_into_begun_dirs;
    }
  }
  for (const auto& p : env.file_paths())
    if (!decoys.count(p) && env.stat(p)->encrypted) r.real_bytes += env.stat(p)->size;
  r.killed = enc.encryptor_stats().killed;
  return r;
}

// Independent count: every address in the block minus network, broadcast,
// gateway, device and peers.
inline std::size_t brute_force_candidates(const SandboxEnvironment& env) {
  const auto net = env.subnet();
  const auto active = env.scan_active_hosts();
  std::size_t n = 0;
  for (std::uint64_t v = net.network().value; v <= net.broadcast().value; ++v) {
    Ipv4Address a{static_cast<std::uint32_t>(v)};
    if (net.prefix() <= 30 && (a == net.network() || a == net.broadcast())) continue;
    if (a == env.gateway_ip() || a == env.device_ip()) continue;
    if (std::find(active.begin(), active.end(), a) != active.end()) continue;
    ++n;
  }
  return n;
}

}  // namespace mtd::test
