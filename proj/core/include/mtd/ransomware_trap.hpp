#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtd/enforcement.hpp"
#include "mtd/environment.hpp"

namespace mtd {

inline constexpr std::string_view kDecoyMagic = "MTDDECOY";

struct TrapConfig {
  std::size_t dummy_files_per_dir = 20;
  std::uint64_t dummy_file_size = 64 * 1024;
  double cpu_floor_percent = 10.0;
  std::uint32_t open_files_per_minute_threshold = 60;
  std::set<std::string> whitelist;
  double poll_interval_s = 1.0;
  /// A suspect must stay suspect this long before it is killed.
  double observation_s = 60.0;
  /// The trap collapses after this long even without a kill.
  double max_runtime_s = 120.0;
  /// Tree watched for encryption activity.
  std::string protected_root = "/home";
  /// Fixed start directory; empty selects the directory of the most recently
  /// modified file under protected_root.
  std::string start_dir;
  std::string decoy_dir_prefix = "_";
  std::string fallback_extension = ".pdf";

  /// Throws ConfigError unless every threshold is positive.
  void validate() const;
};

/// CPU floor, then whitelist (flag or name), then open-file rate.
std::vector<int> identify_encryptor(const std::vector<ProcessRecord>& processes, const TrapConfig& config);

struct TrapStats {
  std::size_t decoys_created = 0;
  std::size_t decoys_deleted = 0;
  std::size_t decoy_dirs_created = 0;
  std::size_t relocations = 0;
  std::vector<int> killed;
  /// pid -> time it was first seen as a suspect (current streak).
  std::map<int, double> suspects;
  /// pid -> time it had been a suspect for when killed.
  std::map<int, double> kill_observation_s;
  std::uint64_t peak_decoy_bytes = 0;
  std::uint64_t real_bytes_encrypted = 0;
  std::size_t real_files_encrypted = 0;
  bool real_encryption_seen = false;
};

/// Decoy honeypot plus encryptor hunter. Decoys form a chain of nested
/// directories: the trap keeps the directory being encrypted and the next one
/// filled, and an empty one after that, so a recursive encryptor keeps
/// descending into decoys. Encrypted decoys are deleted each poll.
class RansomwareTrap {
 public:
  /// Throws PathError when `start_dir` does not exist.
  RansomwareTrap(Host& host, TrapConfig config, std::string start_dir);

  /// One monitoring pass. No-op once finished.
  void poll(double now);
  bool finished() const { return finished_; }
  /// Removes every remaining decoy and empty decoy directory.
  void teardown();

  const TrapStats& stats() const { return stats_; }
  const std::string& start_dir() const { return start_dir_; }
  std::uint64_t live_decoy_bytes() const;
  /// Every decoy file ever created, deleted or not.
  const std::set<std::string>& decoy_registry() const { return registry_; }
  const std::vector<std::string>& decoy_dirs() const { return chain_dirs_; }
  bool is_decoy_path(const std::string& path) const;

 private:
  struct ChainDir {
    explicit ChainDir(std::string p) : path(std::move(p)) {}
    std::string path;
    bool filled = false;
    bool begun = false;
    std::vector<std::string> files;
  };

  struct Scan {
    std::optional<std::pair<double, std::string>> latest_encrypted;
    std::optional<std::pair<double, std::string>> latest_modified;
    std::set<std::string> begun_dirs;
    std::uint64_t encrypted_bytes = 0;
    std::size_t encrypted_files = 0;
  };

  Scan scan() const;
  void collect_encrypted_decoys();
  void extend_chain();
  void place_chain(const std::string& hot_dir, const Scan& scan);
  void drop_chain();
  std::optional<std::string> placement_dir(std::string dir, const Scan& scan);
  std::string make_chain_dir(const std::string& parent);
  void fill(ChainDir& dir);
  void hunt(double now);
  bool decoy_untouched(const std::string& path) const;

  Host& host_;
  TrapConfig config_;
  std::string start_dir_;
  std::string extension_;
  std::vector<ChainDir> chain_;
  std::vector<std::string> chain_dirs_;
  std::set<std::string> registry_;
  std::set<std::string> live_;
  std::string hot_dir_;
  std::string placed_in_;
  double started_ = 0.0;
  double last_poll_ = -1.0;
  bool finished_ = false;
  TrapStats stats_;
};

/// Enforcement adapter: a run lasts until a kill or max_runtime_s.
class TrapMechanism final : public Mechanism {
 public:
  TrapMechanism(Host& host, TrapConfig config);
  MechanismId id() const override { return MechanismId::FileEncryption; }
  void start(const Alarm& trigger, double now) override;
  std::optional<MtdOutcome> poll(double now) override;
  MtdOutcome stop(double now) override;
  bool running() const override { return trap_.has_value(); }
  const RansomwareTrap* trap() const { return trap_ ? &*trap_ : nullptr; }
  /// Stats of the last completed run.
  const std::optional<TrapStats>& last_stats() const { return last_stats_; }
  /// Every decoy file and directory created by any run.
  const std::set<std::string>& decoy_history() const { return decoy_history_; }
  const std::set<std::string>& decoy_dir_history() const { return decoy_dir_history_; }
  std::size_t runs() const { return runs_; }

 private:
  MtdOutcome finish(double now);

  Host& host_;
  TrapConfig config_;
  std::optional<RansomwareTrap> trap_;
  std::optional<TrapStats> last_stats_;
  std::set<std::string> decoy_history_;
  std::set<std::string> decoy_dir_history_;
  std::size_t runs_ = 0;
  double started_ = 0.0;
  double next_poll_ = 0.0;
  std::string trigger_;
};

}  // namespace mtd
