#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtd/environment.hpp"

namespace mtd {

/// Discrete-event malware emulator. The scheduler advances the sandbox clock
/// to next_event() and calls fire(); an emulator never touches anything
/// outside its declared root or addresses.
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string kind() const = 0;
  /// Class label telemetry reports while the emulator is active.
  virtual std::string label() const = 0;
  virtual std::optional<double> next_event() const = 0;
  virtual void fire(SandboxEnvironment& env) = 0;
  /// True when the emulator was active at some point in [from, to).
  virtual bool active_during(double from, double to) const = 0;
  /// Numeric statistics for reports.
  virtual std::map<std::string, double> stats() const = 0;
};

// --- encryptor -----------------------------------------------------------------

struct EncryptorParams {
  std::string root = "/home";
  std::vector<std::string> target_exts{".pdf"};
  double rate_files_per_s = 10.0;
  double cpu_percent = 85.0;
  double start_at = 0.0;
  double max_runtime_s = 84.0;
  std::string process_name = "cryptor";
};

struct EncryptorStats {
  std::size_t files_encrypted = 0;
  std::uint64_t bytes_encrypted = 0;
  std::vector<std::string> encrypted_paths;
  std::optional<double> started;
  std::optional<double> stopped;
  bool killed = false;
  int pid = 0;
};

/// Depth-first, os.walk-like traversal: each directory is listed once on
/// entry, its matching files are encrypted in name order, then its
/// subdirectories are visited in name order. One file per 1/rate seconds.
class Encryptor final : public Adversary {
 public:
  explicit Encryptor(EncryptorParams params);
  std::string kind() const override { return "encryptor"; }
  std::string label() const override { return label_; }
  std::optional<double> next_event() const override;
  void fire(SandboxEnvironment& env) override;
  bool active_during(double from, double to) const override;
  std::map<std::string, double> stats() const override;

  void set_label(std::string label) { label_ = std::move(label); }
  const EncryptorParams& params() const { return params_; }
  const EncryptorStats& encryptor_stats() const { return stats_; }

 private:
  struct Frame {
    std::string dir;
    std::vector<std::string> files;
    std::vector<std::string> subdirs;
    std::size_t next_file = 0;
    std::size_t next_subdir = 0;
  };
  void enter(const SandboxEnvironment& env, const std::string& dir);
  std::optional<std::string> next_file(const SandboxEnvironment& env);
  void finish(SandboxEnvironment& env, double t);

  EncryptorParams params_;
  std::string label_ = "ransomware_poc";
  std::vector<Frame> stack_;
  std::uint64_t ticks_ = 0;
  bool done_ = false;
  EncryptorStats stats_;
};

// --- exfiltrator ---------------------------------------------------------------

struct ExfiltratorParams {
  std::string root = "/data";
  std::vector<std::string> target_exts{".pdf"};
  double rate_bytes_per_s = 200'000.0;
  double start_at = 0.0;
  double duration_s = 112.0;
  double step_s = 0.1;
};

struct LeakStats {
  std::uint64_t bytes_leaked = 0;
  std::size_t files_touched = 0;
  std::size_t files_completed = 0;
};

/// Streams matching files depth-first to a sink. Extensions are checked when
/// a directory is listed and again when a file is opened; a file already
/// being streamed keeps streaming.
class Exfiltrator final : public Adversary {
 public:
  explicit Exfiltrator(ExfiltratorParams params);
  std::string kind() const override { return "exfiltrator"; }
  std::string label() const override { return label_; }
  std::optional<double> next_event() const override;
  void fire(SandboxEnvironment& env) override;
  bool active_during(double from, double to) const override;
  std::map<std::string, double> stats() const override;

  void set_label(std::string label) { label_ = std::move(label); }
  const ExfiltratorParams& params() const { return params_; }
  const LeakStats& leak_stats() const { return stats_; }

 private:
  struct Frame {
    std::string dir;
    std::vector<std::string> files;
    std::vector<std::string> subdirs;
    std::size_t next_file = 0;
    std::size_t next_subdir = 0;
  };
  void enter(const SandboxEnvironment& env, const std::string& dir);
  bool open_next(const SandboxEnvironment& env);

  ExfiltratorParams params_;
  std::string label_ = "dataleak_thetick";
  std::vector<Frame> stack_;
  std::uint64_t remaining_in_file_ = 0;
  bool file_open_ = false;
  std::uint64_t steps_ = 0;
  bool done_ = false;
  std::optional<double> ended_;
  LeakStats stats_;
};

// --- rootkit -------------------------------------------------------------------

struct RootkitParams {
  double inject_at = 0.0;
  std::string library_path = "/lib/beurk.so";
  std::string rogue_preload_path = "/etc/beurk.preload";
  std::string artifact_path = "/var/tmp/beurk.log";
  std::string hide_prefix = "beurk";
};

struct TamperStats {
  std::optional<double> preload_tampered_at;
  std::optional<double> linker_tampered_at;
  std::size_t injections = 0;
};

/// LD_PRELOAD rootkit: points the preload file and the linker reference at
/// itself and hides every name starting with its prefix.
class Rootkit final : public Adversary {
 public:
  explicit Rootkit(RootkitParams params);
  std::string kind() const override { return "rootkit"; }
  std::string label() const override { return label_; }
  std::optional<double> next_event() const override;
  void fire(SandboxEnvironment& env) override;
  bool active_during(double from, double to) const override;
  std::map<std::string, double> stats() const override;

  /// Applies the tampering immediately (idempotent).
  void inject(SandboxEnvironment& env);
  void set_label(std::string label) { label_ = std::move(label); }
  const RootkitParams& params() const { return params_; }
  const TamperStats& tamper_stats() const { return stats_; }

 private:
  RootkitParams params_;
  std::string label_ = "rootkit_beurk";
  bool fired_ = false;
  TamperStats stats_;
};

/// True while the preload file no longer matches `expected_content`.
bool preload_tampered(const SandboxEnvironment& env, const std::string& expected_content);
/// True while the linker reference differs from the configured preload path.
bool linker_tampered(const SandboxEnvironment& env);

// --- botnet --------------------------------------------------------------------

struct BotnetParams {
  std::string c2_address = "203.0.113.10";
  double beacon_interval_s = 2.0;
  double start_at = 0.0;
  double duration_s = 42.0;
};

struct Beacon {
  double time = 0.0;
  Ipv4Address from;
  bool delivered = false;
};

struct BeaconStats {
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::vector<Beacon> log;
};

/// Beacons from the device to its C&C. The C&C learns the device address at
/// infection; a beacon is delivered only while the device still has it.
class Botnet final : public Adversary {
 public:
  explicit Botnet(BotnetParams params);
  std::string kind() const override { return "botnet"; }
  std::string label() const override { return label_; }
  std::optional<double> next_event() const override;
  void fire(SandboxEnvironment& env) override;
  bool active_during(double from, double to) const override;
  std::map<std::string, double> stats() const override;

  void set_label(std::string label) { label_ = std::move(label); }
  const BotnetParams& params() const { return params_; }
  const BeaconStats& beacon_stats() const { return stats_; }
  const std::optional<Ipv4Address>& learned_address() const { return learned_; }

 private:
  BotnetParams params_;
  std::string label_ = "botnet_bashlite";
  std::optional<Ipv4Address> learned_;
  std::uint64_t k_ = 0;
  BeaconStats stats_;
};

/// Runs `adversaries` alone (no defense) until `until`, interleaving their
/// events in time order. Ties go to the earlier adversary in the list.
void run_adversaries(SandboxEnvironment& env, const std::vector<Adversary*>& adversaries, double until);

}  // namespace mtd
