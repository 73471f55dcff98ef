#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtd/enforcement.hpp"
#include "mtd/environment.hpp"

namespace mtd {

/// Subnet host range minus active hosts, gateway and the device, ascending.
/// Throws ExhaustedError when nothing is left.
std::vector<Ipv4Address> enumerate_candidates(const Host& host);

struct IpShuffleConfig {
  /// Virtual cost of one assign + connectivity probe.
  double attempt_cost_s = 2.0;
  /// Virtual cost of scanning and restarting services.
  double base_cost_s = 10.0;

  void validate() const;
};

struct MigrationResult {
  Ipv4Address old_ip;
  Ipv4Address new_ip;
  std::size_t attempts = 0;
  std::size_t candidates = 0;
  double duration_s = 0.0;
};

/// Picks random candidates until one has connectivity, dropping each failed
/// pick, then restarts services. When every candidate fails the device gets
/// its old address back and ExhaustedError is thrown.
MigrationResult migrate(Host& host, Rng& rng, const IpShuffleConfig& config = {});

/// Enforcement adapter: migrates on start, completes after the migration's
/// virtual duration.
class IpShuffleMechanism final : public Mechanism {
 public:
  IpShuffleMechanism(Host& host, IpShuffleConfig config, std::uint64_t seed);
  MechanismId id() const override { return MechanismId::IpAddress; }
  void start(const Alarm& trigger, double now) override;
  std::optional<MtdOutcome> poll(double now) override;
  MtdOutcome stop(double now) override;
  bool running() const override { return running_; }

  const std::optional<MigrationResult>& last_migration() const { return last_; }

 private:
  MtdOutcome finish(double now);

  Host& host_;
  IpShuffleConfig config_;
  Rng rng_;
  bool running_ = false;
  bool reactive_ = false;
  double started_ = 0.0;
  std::string trigger_;
  std::optional<MigrationResult> last_;
  std::string failure_;
};

}  // namespace mtd
