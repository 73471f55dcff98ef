#include "mtd/config.hpp"

#include "mtd/error.hpp"
#include "toml_util.hpp"

namespace mtd {

using namespace detail;

namespace {

std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).lexically_normal().string();
}

ProfileOptions parse_profile_options(const toml::table& t, ProfileOptions o) {
  o.confusable_pair = get_bool(t, "confusable_pair", o.confusable_pair);
  o.separation_sigma = get_double(t, "separation_sigma", o.separation_sigma);
  o.mimic_probability = get_double(t, "mimic_probability", o.mimic_probability);
  if (o.mimic_probability < 0.0 || o.mimic_probability > 1.0) throw ConfigError("mimic_probability must be within [0, 1]");
  return o;
}

TrainConfig parse_train(const toml::table& t, const std::filesystem::path& base, std::string_view section) {
  reject_unknown_keys(t, section,
                      {"n_per_class", "train_fraction", "algo", "n_trees", "max_depth", "min_samples_leaf",
                       "features_per_split", "bootstrap", "threads", "knn_k", "classes", "dataset_path", "report_path",
                       "confusable_pair", "separation_sigma", "mimic_probability"});
  TrainConfig c;
  c.n_per_class = get_count(t, "n_per_class", c.n_per_class);
  c.train_fraction = get_double(t, "train_fraction", c.train_fraction);
  if (auto a = opt_string(t, "algo")) c.algo = parse_algorithm(*a);
  c.forest.n_trees = get_count(t, "n_trees", c.forest.n_trees);
  c.forest.tree.max_depth = static_cast<unsigned>(get_count(t, "max_depth", c.forest.tree.max_depth));
  c.forest.tree.min_samples_leaf = get_count(t, "min_samples_leaf", c.forest.tree.min_samples_leaf);
  c.forest.features_per_split = get_count(t, "features_per_split", c.forest.features_per_split);
  c.forest.bootstrap = get_bool(t, "bootstrap", c.forest.bootstrap);
  c.forest.threads = static_cast<unsigned>(get_count(t, "threads", c.forest.threads));
  c.knn_k = get_count(t, "knn_k", c.knn_k);
  c.classes = get_strings(t, "classes");
  c.dataset_path = resolve_path(get_string(t, "dataset_path", ""), base);
  c.report_path = get_string(t, "report_path", "");
  c.profiles = parse_profile_options(t, c.profiles);
  if (c.n_per_class == 0) throw ConfigError("[" + std::string(section) + "] n_per_class must be positive");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw ConfigError("[" + std::string(section) + "] train_fraction must be within (0, 1)");
  if (c.forest.n_trees == 0) throw ConfigError("[" + std::string(section) + "] n_trees must be positive");
  if (c.forest.tree.max_depth == 0) throw ConfigError("[" + std::string(section) + "] max_depth must be positive");
  if (c.forest.tree.min_samples_leaf == 0) throw ConfigError("[" + std::string(section) + "] min_samples_leaf must be positive");
  if (c.knn_k == 0) throw ConfigError("[" + std::string(section) + "] knn_k must be positive");
  return c;
}

AdversarySpec parse_adversary(const toml::table& t) {
  AdversarySpec a;
  a.kind = require_string(t, "kind", "adversary");
  a.label = get_string(t, "label", "");
  if (a.kind == "encryptor") {
    reject_unknown_keys(t, "adversary.encryptor",
                        {"kind", "label", "root", "target_exts", "rate_files_per_s", "cpu_percent", "start_at",
                         "max_runtime_s", "process_name"});
    auto& p = a.encryptor;
    p.root = get_string(t, "root", p.root);
    p.target_exts = get_strings(t, "target_exts", p.target_exts);
    p.rate_files_per_s = get_double(t, "rate_files_per_s", p.rate_files_per_s);
    p.cpu_percent = get_double(t, "cpu_percent", p.cpu_percent);
    p.start_at = get_double(t, "start_at", p.start_at);
    p.max_runtime_s = get_double(t, "max_runtime_s", p.max_runtime_s);
    p.process_name = get_string(t, "process_name", p.process_name);
  } else if (a.kind == "exfiltrator") {
    reject_unknown_keys(t, "adversary.exfiltrator",
                        {"kind", "label", "root", "target_exts", "rate_bytes_per_s", "start_at", "duration_s", "step_s"});
    auto& p = a.exfiltrator;
    p.root = get_string(t, "root", p.root);
    p.target_exts = get_strings(t, "target_exts", p.target_exts);
    p.rate_bytes_per_s = get_double(t, "rate_bytes_per_s", p.rate_bytes_per_s);
    p.start_at = get_double(t, "start_at", p.start_at);
    p.duration_s = get_double(t, "duration_s", p.duration_s);
    p.step_s = get_double(t, "step_s", p.step_s);
  } else if (a.kind == "rootkit") {
    reject_unknown_keys(t, "adversary.rootkit",
                        {"kind", "label", "inject_at", "inject_min", "inject_max", "library_path", "rogue_preload_path",
                         "artifact_path", "hide_prefix"});
    auto& p = a.rootkit;
    p.inject_at = get_double(t, "inject_at", p.inject_at);
    auto lo = opt_double(t, "inject_min");
    auto hi = opt_double(t, "inject_max");
    if (lo || hi) {
      if (!lo || !hi || *hi < *lo || *lo < 0.0) throw ConfigError("rootkit inject_min/inject_max must form a range");
      if (t.get("inject_at")) throw ConfigError("rootkit takes inject_at or an inject range, not both");
      a.inject_range = {*lo, *hi};
    }
    p.library_path = get_string(t, "library_path", p.library_path);
    p.rogue_preload_path = get_string(t, "rogue_preload_path", p.rogue_preload_path);
    p.artifact_path = get_string(t, "artifact_path", p.artifact_path);
    p.hide_prefix = get_string(t, "hide_prefix", p.hide_prefix);
  } else if (a.kind == "botnet") {
    reject_unknown_keys(t, "adversary.botnet",
                        {"kind", "label", "c2_address", "beacon_interval_s", "start_at", "duration_s"});
    auto& p = a.botnet;
    p.c2_address = get_string(t, "c2_address", p.c2_address);
    p.beacon_interval_s = get_double(t, "beacon_interval_s", p.beacon_interval_s);
    p.start_at = get_double(t, "start_at", p.start_at);
    p.duration_s = get_double(t, "duration_s", p.duration_s);
  } else {
    throw ConfigError("unknown adversary kind '" + a.kind + "'" + where(t));
  }
  return a;
}

void parse_mechanisms(const toml::table& t, MechanismSettings& m) {
  reject_unknown_keys(t, "mechanisms", {"file_encryption", "file_format", "libraries", "ip_address"});
  if (const auto* s = table_at(t, "file_encryption")) {
    reject_unknown_keys(*s, "mechanisms.file_encryption",
                        {"dummy_files_per_dir", "dummy_file_size", "cpu_floor_percent", "open_files_per_minute_threshold",
                         "whitelist", "poll_interval_s", "observation_s", "max_runtime_s", "protected_root", "start_dir",
                         "decoy_dir_prefix", "fallback_extension"});
    auto& c = m.trap;
    c.dummy_files_per_dir = get_count(*s, "dummy_files_per_dir", c.dummy_files_per_dir);
    c.dummy_file_size = get_count(*s, "dummy_file_size", c.dummy_file_size);
    c.cpu_floor_percent = get_double(*s, "cpu_floor_percent", c.cpu_floor_percent);
    c.open_files_per_minute_threshold =
        static_cast<std::uint32_t>(get_count(*s, "open_files_per_minute_threshold", c.open_files_per_minute_threshold));
    if (auto w = opt_strings(*s, "whitelist")) c.whitelist = {w->begin(), w->end()};
    c.poll_interval_s = get_double(*s, "poll_interval_s", c.poll_interval_s);
    c.observation_s = get_double(*s, "observation_s", c.observation_s);
    c.max_runtime_s = get_double(*s, "max_runtime_s", c.max_runtime_s);
    c.protected_root = get_string(*s, "protected_root", c.protected_root);
    c.start_dir = get_string(*s, "start_dir", c.start_dir);
    c.decoy_dir_prefix = get_string(*s, "decoy_dir_prefix", c.decoy_dir_prefix);
    c.fallback_extension = get_string(*s, "fallback_extension", c.fallback_extension);
  }
  if (const auto* s = table_at(t, "file_format")) {
    reject_unknown_keys(*s, "mechanisms.file_format",
                        {"root", "target_exts", "pseudo_length", "map_path", "genuine_extensions", "hold_s"});
    auto& c = m.file_format;
    c.root = get_string(*s, "root", c.root);
    c.target_exts = get_strings(*s, "target_exts", c.target_exts);
    c.options.pseudo_length = get_count(*s, "pseudo_length", c.options.pseudo_length);
    c.options.map_path = get_string(*s, "map_path", c.options.map_path);
    c.options.genuine_universe = get_strings(*s, "genuine_extensions", c.options.genuine_universe);
    c.hold_s = get_double(*s, "hold_s", c.hold_s);
  }
  if (const auto* s = table_at(t, "libraries")) {
    reject_unknown_keys(*s, "mechanisms.libraries", {"preload_path", "linker_path", "linker_ref_offset", "duration_s"});
    auto& c = m.libraries;
    c.paths.preload_path = get_string(*s, "preload_path", c.paths.preload_path);
    c.paths.linker_path = get_string(*s, "linker_path", c.paths.linker_path);
    c.paths.linker_ref_offset = get_count(*s, "linker_ref_offset", c.paths.linker_ref_offset);
    c.duration_s = get_double(*s, "duration_s", c.duration_s);
  }
  if (const auto* s = table_at(t, "ip_address")) {
    reject_unknown_keys(*s, "mechanisms.ip_address", {"attempt_cost_s", "base_cost_s"});
    m.ip.attempt_cost_s = get_double(*s, "attempt_cost_s", m.ip.attempt_cost_s);
    m.ip.base_cost_s = get_double(*s, "base_cost_s", m.ip.base_cost_s);
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Knn: return "knn";
    case Algorithm::Tree: return "tree";
    case Algorithm::Forest: return "forest";
  }
  return "forest";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "knn") return Algorithm::Knn;
  if (text == "tree") return Algorithm::Tree;
  if (text == "forest") return Algorithm::Forest;
  throw ConfigError("unknown algorithm '" + std::string(text) + "' (expected knn, tree or forest)");
}

EnforcementPolicy FrameworkConfig::enforcement_policy() const {
  return policy.empty() ? EnforcementPolicy::standard() : EnforcementPolicy(policy);
}

void FrameworkConfig::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (!(step_s > 0.0)) throw ConfigError("step_s must be positive");
  if (backend != "sandbox" && backend != "live") throw ConfigError("backend must be 'sandbox' or 'live'");
  validate_rules(proactive);
  for (const auto& r : proactive)
    for (const auto& m : r.mtds)
      if (!parse_mechanism_id(m)) throw ConfigError("proactive rule '" + r.id + "' names unknown mechanism '" + m + "'");
  (void)enforcement_policy();
  mechanisms.trap.validate();
  mechanisms.file_format.validate();
  mechanisms.ip.validate();
  if (reactive) {
    if (reactive->config.threshold < 0.0 || reactive->config.threshold > 1.0)
      throw ConfigError("[reactive] threshold must be within [0, 1]");
    if (reactive->config.suppress_s < 0.0) throw ConfigError("[reactive] suppress_s must be non-negative");
  }
  for (const auto& s : script)
    if (s.behavior.empty() == s.action.empty()) throw ConfigError("each [[script]] entry needs exactly one of behavior/action");
}

FrameworkConfig parse_framework_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  auto tbl = parse_toml(toml_text, "config");
  reject_unknown_keys(tbl, "top level",
                      {"name", "seed", "duration_s", "backend", "step_s", "journal_path", "environment", "environment_file",
                       "proactive", "reactive", "policy", "mechanisms", "adversary", "script", "telemetry", "train",
                       "scenario", "live"});
  FrameworkConfig c;
  c.name = get_string(tbl, "name", c.name);
  c.seed = get_count(tbl, "seed", c.seed);
  c.duration_s = get_double(tbl, "duration_s", c.duration_s);
  c.backend = get_string(tbl, "backend", c.backend);
  c.step_s = get_double(tbl, "step_s", c.step_s);
  c.journal_path = resolve_path(get_string(tbl, "journal_path", ""), base_dir);

  if (const auto* l = table_at(tbl, "live")) {
    reject_unknown_keys(*l, "live", {"root", "whitelist"});
    c.live.root = resolve_path(get_string(*l, "root", c.live.root), base_dir);
    c.live.whitelist = get_strings(*l, "whitelist");
  }

  const auto* env_tbl = table_at(tbl, "environment");
  auto env_file = opt_string(tbl, "environment_file");
  if (env_tbl && env_file) throw ConfigError("use either [environment] or environment_file, not both");
  if (env_tbl) {
    c.environment = environment_spec_from_toml(*env_tbl, c.seed);
  } else if (env_file) {
    auto path = resolve_path(*env_file, base_dir);
    auto text = read_text_file(path);
    c.environment = environment_spec_from_toml(parse_toml(text, path), c.seed);
  } else {
    c.environment.seed = c.seed;
  }
  if (c.environment.linker.enabled) {
    c.mechanisms.libraries.paths.preload_path = c.environment.linker.preload_path;
    c.mechanisms.libraries.paths.linker_path = c.environment.linker.linker_path;
    c.mechanisms.libraries.paths.linker_ref_offset = c.environment.linker.linker_ref_offset;
  }

  for (const auto* r : tables_at(tbl, "proactive")) {
    reject_unknown_keys(*r, "proactive", {"id", "every_s", "on_action", "mtds"});
    ProactiveRule rule;
    rule.id = require_string(*r, "id", "proactive");
    rule.every_s = opt_double(*r, "every_s");
    rule.on_action = opt_string(*r, "on_action");
    rule.mtds = get_strings(*r, "mtds");
    c.proactive.push_back(std::move(rule));
  }

  if (const auto* r = table_at(tbl, "reactive")) {
    reject_unknown_keys(*r, "reactive",
                        {"enabled", "model_path", "scaler_path", "threshold", "suppress_s", "thresholds", "train_inline",
                         "train"});
    if (get_bool(*r, "enabled", true)) {
      ReactiveSetup s;
      s.config.model_path = resolve_path(get_string(*r, "model_path", ""), base_dir);
      s.config.scaler_path = resolve_path(get_string(*r, "scaler_path", ""), base_dir);
      s.config.threshold = get_double(*r, "threshold", s.config.threshold);
      s.config.suppress_s = get_double(*r, "suppress_s", s.config.suppress_s);
      if (const auto* th = table_at(*r, "thresholds"))
        for (const auto& [k, v] : *th) {
          auto d = v.value<double>();
          if (!d) throw ConfigError("[reactive.thresholds] values must be numbers" + where(v));
          s.config.label_thresholds[std::string(k.str())] = *d;
        }
      s.train_inline = get_bool(*r, "train_inline", false);
      if (const auto* tr = table_at(*r, "train")) s.train = parse_train(*tr, base_dir, "reactive.train");
      if (!s.train_inline && s.config.model_path.empty())
        throw ConfigError("[reactive] needs model_path or train_inline = true");
      if (!s.train_inline && s.config.scaler_path.empty()) throw ConfigError("[reactive] model_path requires scaler_path");
      c.reactive = std::move(s);
    }
  }

  for (const auto* p : tables_at(tbl, "policy")) {
    reject_unknown_keys(*p, "policy", {"on", "deploy"});
    c.policy.push_back({require_string(*p, "on", "policy"), get_strings(*p, "deploy")});
  }
  if (const auto* m = table_at(tbl, "mechanisms")) parse_mechanisms(*m, c.mechanisms);
  for (const auto* a : tables_at(tbl, "adversary")) c.adversaries.push_back(parse_adversary(*a));
  for (const auto* s : tables_at(tbl, "script")) {
    reject_unknown_keys(*s, "script", {"at", "behavior", "action"});
    ScriptedEvent e;
    auto at = opt_double(*s, "at");
    if (!at) throw ConfigError("[[script]] entry needs 'at'");
    e.at = *at;
    e.behavior = get_string(*s, "behavior", "");
    e.action = get_string(*s, "action", "");
    c.script.push_back(std::move(e));
  }
  if (const auto* t = table_at(tbl, "telemetry")) {
    reject_unknown_keys(*t, "telemetry", {"confusable_pair", "separation_sigma", "mimic_probability"});
    c.telemetry = parse_profile_options(*t, c.telemetry);
  }
  if (const auto* t = table_at(tbl, "train")) c.train = parse_train(*t, base_dir, "train");
  if (const auto* s = table_at(tbl, "scenario")) {
    reject_unknown_keys(*s, "scenario", {"baseline_compare", "check_restore"});
    c.scenario.baseline_compare = get_bool(*s, "baseline_compare", false);
    c.scenario.check_restore = get_bool(*s, "check_restore", false);
  }
  c.validate();
  return c;
}

FrameworkConfig load_framework_config(const std::filesystem::path& path) {
  auto text = read_text_file(path.string());
  return parse_framework_config(text, path.parent_path());
}

}  // namespace mtd
