#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mtd/adversary.hpp"
#include "mtd/classifier.hpp"
#include "mtd/decision.hpp"
#include "mtd/enforcement.hpp"
#include "mtd/environment.hpp"
#include "mtd/file_format.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/libraries.hpp"
#include "mtd/ransomware_trap.hpp"
#include "mtd/telemetry.hpp"

namespace mtd {

enum class Algorithm { Knn, Tree, Forest };
std::string_view to_string(Algorithm a);
/// Throws ConfigError for anything but knn|tree|forest.
Algorithm parse_algorithm(std::string_view text);

/// Dataset generation and model training settings.
struct TrainConfig {
  std::size_t n_per_class = 2160;
  double train_fraction = 0.8;
  Algorithm algo = Algorithm::Forest;
  ForestParams forest;
  std::size_t knn_k = 5;
  /// Classes to generate; empty means the eight default behaviors.
  std::vector<std::string> classes;
  ProfileOptions profiles;
  /// Optional CSV to train on instead of generating.
  std::string dataset_path;
  std::string report_path;
};

/// Reactive path. A model is loaded from model_path/scaler_path, or trained
/// in memory from `train` when `train_inline` is set.
struct ReactiveSetup {
  ReactiveConfig config;
  bool train_inline = false;
  TrainConfig train;
};

struct ScriptedEvent {
  double at = 0.0;
  /// Injects a reactive alarm with this label ("scripted" source).
  std::string behavior;
  /// Or posts this action event to the decision engine.
  std::string action;
};

struct AdversarySpec {
  std::string kind;
  std::string label;
  EncryptorParams encryptor;
  ExfiltratorParams exfiltrator;
  RootkitParams rootkit;
  BotnetParams botnet;
  /// Rootkit only: draw inject_at uniformly from [min, max] using the seed.
  std::optional<std::pair<double, double>> inject_range;
};

struct MechanismSettings {
  TrapConfig trap;
  FileFormatConfig file_format;
  LibrariesConfig libraries;
  IpShuffleConfig ip;
};

struct ScenarioOptions {
  /// Also run the identical scenario without any MTD for comparison.
  bool baseline_compare = false;
  /// Snapshot names under file_format.root and compare after restore.
  bool check_restore = false;
};

/// Live backend: host paths resolve under `root`; whitelisted process names
/// are never killed.
struct LiveSettings {
  std::string root = "/";
  std::vector<std::string> whitelist;
};

struct FrameworkConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  double duration_s = 120.0;
  std::string backend = "sandbox";
  double step_s = 1.0;
  EnvironmentSpec environment;
  std::vector<ProactiveRule> proactive;
  std::optional<ReactiveSetup> reactive;
  /// Empty selects the standard policy.
  std::vector<PolicyRule> policy;
  MechanismSettings mechanisms;
  std::vector<AdversarySpec> adversaries;
  std::vector<ScriptedEvent> script;
  ProfileOptions telemetry;
  TrainConfig train;
  ScenarioOptions scenario;
  LiveSettings live;
  std::string journal_path;

  EnforcementPolicy enforcement_policy() const;
  /// Cross-section checks (rules, policy, mechanism settings).
  void validate() const;
};

/// Parses a framework/scenario document. Relative paths (environment file,
/// model, scaler, dataset) resolve against `base_dir`. Throws ConfigError.
FrameworkConfig parse_framework_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
FrameworkConfig load_framework_config(const std::filesystem::path& path);

}  // namespace mtd
