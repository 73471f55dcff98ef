#include "mtd/scenario.hpp"

#include <algorithm>
#include <set>

#include "mtd/error.hpp"
#include "mtd/file_format.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/libraries.hpp"
#include "mtd/ransomware_trap.hpp"

namespace mtd {
namespace {

std::vector<std::string> names_under(const SandboxEnvironment& env, const std::string& root) {
  std::vector<std::string> out;
  for (const auto& p : env.file_paths())
    if (is_within(p, root)) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t matching_bytes(const SandboxEnvironment& env, const std::string& root, const std::vector<std::string>& exts) {
  std::uint64_t total = 0;
  for (const auto& p : env.file_paths()) {
    if (!is_within(p, root)) continue;
    const auto ext = extension_of(p);
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    total += env.stat(p)->size;
  }
  return total;
}

const MtdOutcome* pick_outcome(const std::vector<MtdOutcome>& outcomes, MechanismId id) {
  const auto name = std::string(to_string(id));
  const MtdOutcome* first = nullptr;
  const MtdOutcome* failed = nullptr;
  for (const auto& o : outcomes) {
    if (o.mechanism != name) continue;
    if (o.status == OutcomeStatus::Mitigated) return &o;
    if (!failed && o.status == OutcomeStatus::Failed) failed = &o;
    if (!first) first = &o;
  }
  return failed ? failed : first;
}

void fill_mtd(PhaseRow& row, const std::vector<MtdOutcome>& outcomes, MechanismId id) {
  if (const auto* o = pick_outcome(outcomes, id)) {
    row.mtd = o->mechanism;
    row.mtd_status = std::string(to_string(o->status));
    row.mtd_duration_s = o->end - o->start;
  }
}

double end_or(std::optional<double> end, double fallback) { return end ? *end : fallback; }

struct Baseline {
  std::map<std::size_t, double> value;  // adversary index -> headline number
};

Baseline run_baseline(const FrameworkConfig& config) {
  Framework fw(config, false);
  fw.run();
  Baseline b;
  for (std::size_t i = 0; i < fw.adversaries().size(); ++i) {
    const auto* a = fw.adversaries()[i].get();
    if (const auto* e = dynamic_cast<const Encryptor*>(a)) b.value[i] = static_cast<double>(e->encryptor_stats().bytes_encrypted);
    if (const auto* x = dynamic_cast<const Exfiltrator*>(a)) b.value[i] = static_cast<double>(x->leak_stats().bytes_leaked);
    if (const auto* n = dynamic_cast<const Botnet*>(a)) b.value[i] = static_cast<double>(n->beacon_stats().delivered);
  }
  return b;
}

}  // namespace

void override_seed(FrameworkConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.environment.seed = seed;
}

ScenarioReport run_scenario(const FrameworkConfig& config, std::optional<TrainingResult> model) {
  if (config.backend != "sandbox") throw ConfigError("scenarios run on the sandbox backend only");
  Framework fw(config, true, std::move(model));
  auto& env = *fw.sandbox();
  const double T = config.duration_s;

  const auto& ff = config.mechanisms.file_format;
  const auto names_before = config.scenario.check_restore ? names_under(env, ff.root) : std::vector<std::string>{};
  std::map<std::size_t, std::uint64_t> target_bytes;
  for (std::size_t i = 0; i < fw.adversaries().size(); ++i)
    if (const auto* x = dynamic_cast<const Exfiltrator*>(fw.adversaries()[i].get()))
      target_bytes[i] = matching_bytes(env, x->params().root, x->params().target_exts);

  const std::string clean_preload =
      fw.baseline() ? fw.baseline()->preload_content : config.environment.linker.preload_content;
  std::map<std::size_t, double> cleared_at;
  std::uint64_t observed_decoy_peak = 0;
  auto* trap = fw.enforcer() ? dynamic_cast<TrapMechanism*>(fw.enforcer()->mechanism(MechanismId::FileEncryption)) : nullptr;

  fw.set_observer([&](double t) {
    for (std::size_t i = 0; i < fw.adversaries().size(); ++i) {
      const auto* rk = dynamic_cast<const Rootkit*>(fw.adversaries()[i].get());
      if (!rk || rk->tamper_stats().injections == 0 || cleared_at.count(i)) continue;
      if (!preload_tampered(env, clean_preload) && !linker_tampered(env)) cleared_at[i] = t;
    }
    if (trap && trap->trap()) observed_decoy_peak = std::max(observed_decoy_peak, trap->trap()->live_decoy_bytes());
  });
  fw.run();

  Baseline baseline;
  if (config.scenario.baseline_compare) baseline = run_baseline(config);

  ScenarioReport rep;
  rep.scenario = config.name;
  rep.seed = config.seed;
  rep.duration_s = T;
  rep.alarms = fw.alarms();
  if (fw.enforcer()) rep.outcomes = fw.enforcer()->outcomes();
  const auto& outcomes = rep.outcomes;
  auto& m = rep.metrics;
  auto& c = rep.checks;

  std::vector<PhaseRow> baseline_rows;
  for (std::size_t i = 0; i < fw.adversaries().size(); ++i) {
    const auto* a = fw.adversaries()[i].get();
    PhaseRow row;
    if (const auto* e = dynamic_cast<const Encryptor*>(a)) {
      const auto& s = e->encryptor_stats();
      const std::set<std::string> decoys = trap ? trap->decoy_history() : std::set<std::string>{};
      std::uint64_t real_bytes = 0, real_files = 0;
      for (const auto& p : env.file_paths()) {
        if (!is_within(p, e->params().root) || decoys.count(p)) continue;
        auto info = env.stat(p);
        if (info->encrypted) {
          real_bytes += info->size;
          ++real_files;
        }
      }
      row.phase = "ransomware";
      row.duration_s = s.started ? end_or(s.stopped, T) - *s.started : 0.0;
      row.files_affected = real_files;
      row.bytes_affected = real_bytes;
      fill_mtd(row, outcomes, MechanismId::FileEncryption);
      m["ransomware.real_files_encrypted"] = static_cast<double>(real_files);
      m["ransomware.real_bytes_encrypted"] = static_cast<double>(real_bytes);
      m["ransomware.runtime_s"] = row.duration_s;
      m["ransomware.encryptor_killed"] = s.killed ? 1.0 : 0.0;
      if (s.killed && s.stopped) m["ransomware.kill_observed_at_s"] = *s.stopped;
      c["ransomware.encryptor_killed"] = s.killed && s.stopped && *s.stopped <= T;

      std::size_t wrongly_removed = 0;
      if (trap) {
        const auto& dirs = trap->decoy_dir_history();
        for (const auto& entry : env.audit_log())
          if (entry.actor == "mtd:file_encryption" && entry.op == "remove" && !decoys.count(entry.target) &&
              !dirs.count(entry.target))
            ++wrongly_removed;
        const auto& tc = config.mechanisms.trap;
        const auto bound = 2 * tc.dummy_files_per_dir * tc.dummy_file_size;
        std::uint64_t peak = observed_decoy_peak;
        double created = 0, deleted = 0;
        for (const auto& o : outcomes) {
          if (o.mechanism != to_string(MechanismId::FileEncryption)) continue;
          peak = std::max(peak, static_cast<std::uint64_t>(o.metric("peak_decoy_bytes")));
          created += o.metric("decoys_created");
          deleted += o.metric("decoys_deleted");
        }
        m["ransomware.decoys_created"] = created;
        m["ransomware.decoys_deleted"] = deleted;
        m["ransomware.peak_decoy_bytes"] = static_cast<double>(peak);
        m["ransomware.decoy_bound_bytes"] = static_cast<double>(bound);
        c["ransomware.decoy_bound_respected"] = peak <= bound;
        if (trap->last_stats()) {
          bool sound = true;
          for (const auto& [pid, observed] : trap->last_stats()->kill_observation_s) {
            sound = sound && observed >= tc.observation_s;
            m["ransomware.kill_observation_s"] = observed;
          }
          c["ransomware.kills_after_full_observation"] = sound;
        }
      }
      m["ransomware.real_files_removed_by_trap"] = static_cast<double>(wrongly_removed);
      c["ransomware.no_real_file_deleted"] = wrongly_removed == 0;
      if (baseline.value.count(i)) {
        const double base = baseline.value[i];
        m["ransomware.baseline_bytes_encrypted"] = base;
        const double ratio = base > 0 ? static_cast<double>(real_bytes) / base : 0.0;
        m["ransomware.real_loss_ratio"] = ratio;
        c["ransomware.loss_within_10pct_of_baseline"] = ratio <= 0.10;
        baseline_rows.push_back({"ransomware (no MTD)", e->params().max_runtime_s, 0,
                                 static_cast<std::uint64_t>(base), "none", "none", 0.0});
      }
      bool contained = true;
      for (const auto& entry : env.audit_log())
        if (entry.actor == "adversary:encryptor" && (entry.op == "encrypt" || entry.op == "open"))
          contained = contained && is_within(entry.target, e->params().root);
      c["ransomware.contained_to_root"] = contained;
    } else if (const auto* x = dynamic_cast<const Exfiltrator*>(a)) {
      const auto& s = x->leak_stats();
      row.phase = "data_leak";
      row.duration_s = x->active_during(0.0, T + 1.0) ? std::min(x->params().duration_s, T - x->params().start_at) : 0.0;
      row.files_affected = s.files_touched;
      row.bytes_affected = s.bytes_leaked;
      fill_mtd(row, outcomes, MechanismId::FileFormat);
      const double total = static_cast<double>(target_bytes[i]);
      const double ratio = total > 0 ? static_cast<double>(s.bytes_leaked) / total : 0.0;
      m["data_leak.bytes_leaked"] = static_cast<double>(s.bytes_leaked);
      m["data_leak.files_touched"] = static_cast<double>(s.files_touched);
      m["data_leak.total_target_bytes"] = total;
      m["data_leak.leak_ratio"] = ratio;
      c["data_leak.leak_within_15pct"] = ratio <= 0.15;
      if (baseline.value.count(i)) {
        const double base = baseline.value[i];
        m["data_leak.baseline_bytes_leaked"] = base;
        m["data_leak.baseline_leak_ratio"] = total > 0 ? base / total : 0.0;
        c["data_leak.leak_below_baseline"] = static_cast<double>(s.bytes_leaked) < base;
        baseline_rows.push_back({"data_leak (no MTD)", x->params().duration_s, 0, static_cast<std::uint64_t>(base),
                                 "none", "none", 0.0});
      }
    } else if (const auto* rk = dynamic_cast<const Rootkit*>(a)) {
      const double inject = rk->params().inject_at;
      row.phase = "rootkit";
      const bool injected = rk->tamper_stats().injections > 0;
      row.duration_s = injected ? (cleared_at.count(i) ? cleared_at[i] : T) - inject : 0.0;
      row.files_affected = injected ? 2 : 0;
      fill_mtd(row, outcomes, MechanismId::Libraries);
      m["rootkit.inject_at_s"] = inject;
      double limit = 60.0;
      for (const auto& r : config.proactive) {
        if (!r.every_s) continue;
        auto plan = config.enforcement_policy().resolve(Alarm{AlarmOrigin::Proactive, {}, {}, 0.0, r.id, r.mtds});
        for (const auto& name : plan.mechanisms)
          if (parse_mechanism_id(name) == MechanismId::Libraries) limit = std::min(limit, *r.every_s);
      }
      m["rootkit.latency_limit_s"] = limit;
      if (injected && cleared_at.count(i)) {
        m["rootkit.disinfection_latency_s"] = cleared_at[i] - inject;
        c["rootkit.disinfected_within_interval"] = cleared_at[i] - inject <= limit;
      } else {
        c["rootkit.disinfected_within_interval"] = false;
      }
      bool visible = false;
      const auto artifact = rk->params().artifact_path;
      for (const auto& e : env.list_dir(parent_path(artifact))) visible = visible || e.name == base_name(artifact);
      c["rootkit.artifacts_visible_after_sanitize"] = visible;
      if (fw.baseline()) {
        sanitize_preload(env, *fw.baseline());
        restore_linker_reference(env, *fw.baseline());
        const bool again = !sanitize_preload(env, *fw.baseline()).changed &&
                           !restore_linker_reference(env, *fw.baseline()).changed;
        c["rootkit.sanitize_idempotent"] = again;
      }
    } else if (const auto* b = dynamic_cast<const Botnet*>(a)) {
      const auto& s = b->beacon_stats();
      row.phase = "botnet";
      row.duration_s = std::max(0.0, std::min(b->params().duration_s, T - b->params().start_at));
      fill_mtd(row, outcomes, MechanismId::IpAddress);
      m["botnet.beacons_sent"] = static_cast<double>(s.sent);
      m["botnet.beacons_delivered"] = static_cast<double>(s.delivered);
      std::optional<double> migrated;
      for (const auto& o : outcomes)
        if (o.mechanism == to_string(MechanismId::IpAddress) && o.metric("migrations") > 0) {
          migrated = o.start;
          break;
        }
      if (migrated) {
        std::size_t after = 0;
        for (const auto& beacon : s.log)
          if (beacon.time >= *migrated && beacon.delivered) ++after;
        m["botnet.migration_at_s"] = *migrated;
        m["botnet.delivered_after_migration"] = static_cast<double>(after);
        c["botnet.no_delivery_after_migration"] = after == 0;
      } else {
        c["botnet.no_delivery_after_migration"] = false;
      }
      if (auto* ip = fw.enforcer() ? dynamic_cast<IpShuffleMechanism*>(fw.enforcer()->mechanism(MechanismId::IpAddress))
                                   : nullptr;
          ip && ip->last_migration()) {
        const auto& mig = *ip->last_migration();
        m["botnet.migration_attempts"] = static_cast<double>(mig.attempts);
        c["botnet.migration_valid"] = mig.new_ip != mig.old_ip && env.subnet().contains_host(mig.new_ip) &&
                                      mig.attempts <= mig.candidates;
      }
      if (baseline.value.count(i)) {
        m["botnet.baseline_delivered"] = baseline.value[i];
        baseline_rows.push_back({"botnet (no MTD)", b->params().duration_s, 0, 0, "none", "none", 0.0});
      }
    }
    rep.phases.push_back(std::move(row));
  }
  for (auto& r : baseline_rows) rep.phases.push_back(std::move(r));

  const bool scripted_detection = std::any_of(config.script.begin(), config.script.end(),
                                              [](const ScriptedEvent& e) { return !e.behavior.empty(); });
  if (fw.adversaries().empty() && !scripted_detection) {
    PhaseRow idle;
    idle.phase = "idle";
    idle.duration_s = T;
    std::set<std::string> mechs;
    bool all_noop = true;
    for (const auto& o : outcomes) {
      mechs.insert(o.mechanism);
      all_noop = all_noop && o.status == OutcomeStatus::NoOp;
    }
    std::string joined;
    for (const auto& s : mechs) joined += (joined.empty() ? "" : "+") + s;
    if (!joined.empty()) {
      idle.mtd = joined;
      idle.mtd_status = all_noop ? "no-op" : "mixed";
    }
    rep.phases.push_back(std::move(idle));
    c["idle.all_outcomes_noop"] = all_noop;
  }

  if (config.scenario.check_restore) {
    auto after = names_under(env, ff.root);
    c["data_leak.restore_name_identical"] = after == names_before;
  }
  bool consistent = true;
  for (const auto& o : outcomes) consistent = consistent && o.end >= o.start &&
                                              (o.status != OutcomeStatus::Mitigated || o.has_nonzero_metric());
  c["outcomes.consistent"] = consistent;
  m["alarms.total"] = static_cast<double>(rep.alarms.size());
  m["outcomes.total"] = static_cast<double>(outcomes.size());
  return rep;
}

ScenarioReport run_scenario_file(const std::filesystem::path& path, std::optional<std::uint64_t> seed) {
  auto config = load_framework_config(path);
  if (seed) override_seed(config, *seed);
  return run_scenario(config);
}

}  // namespace mtd
