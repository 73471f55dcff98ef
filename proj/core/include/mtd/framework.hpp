#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtd/adversary.hpp"
#include "mtd/classifier.hpp"
#include "mtd/config.hpp"
#include "mtd/decision.hpp"
#include "mtd/enforcement.hpp"
#include "mtd/journal.hpp"
#include "mtd/libraries.hpp"
#include "mtd/telemetry.hpp"

namespace mtd {

struct TrainingResult {
  std::shared_ptr<const Model> model;
  Scaler scaler;
  EvalReport report;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Dataset (generated or loaded), stratified split, min-max scaling fitted on
/// the training part, training and evaluation on the test part.
TrainingResult run_training(const TrainConfig& config, std::uint64_t seed);

/// Profiles used for telemetry and training: default profiles, optionally
/// restricted to `classes`. Throws ConfigError for unknown class names.
std::vector<BehaviorProfile> select_profiles(const ProfileOptions& options, const std::vector<std::string>& classes);

/// Instantiates the configured adversaries; rootkit inject ranges are drawn
/// from `seed`.
std::vector<std::unique_ptr<Adversary>> make_adversaries(const std::vector<AdversarySpec>& specs, std::uint64_t seed);

struct RunControl {
  /// Checked between steps; the run ends early once set.
  const std::atomic<bool>* stop = nullptr;
  /// Pace steps to wall-clock time.
  bool realtime = false;
};

/// Telemetry -> decision -> enforcement loop over a host, with adversaries
/// interleaved on the sandbox backend. Each step at time t collects every
/// telemetry window ending at or before t, classifies it, fires scripted and
/// proactive alarms, hands alarms to enforcement and polls running
/// mechanisms; adversary events in [t, t + step) follow.
class Framework {
 public:
  /// `defenses` = false runs the same scenario with decision and enforcement
  /// switched off (baseline). A pre-trained model skips inline training.
  explicit Framework(FrameworkConfig config, bool defenses = true,
                     std::optional<TrainingResult> model = std::nullopt);
  /// Runs against an externally owned host (live backend).
  Framework(FrameworkConfig config, Host& host, std::optional<TrainingResult> model = std::nullopt);
  ~Framework();

  Framework(const Framework&) = delete;
  Framework& operator=(const Framework&) = delete;

  void step(double t);
  /// Steps from the current time to duration_s, then shuts down.
  void run(const RunControl& control = {});
  /// Stops running mechanisms and flushes the journal.
  void finish(double t);
  bool finished() const { return finished_; }

  /// Called after each step with its time.
  void set_observer(std::function<void(double)> observer) { observer_ = std::move(observer); }

  const FrameworkConfig& config() const { return config_; }
  Host& host() { return *host_; }
  /// Null on the live backend.
  SandboxEnvironment* sandbox() { return sandbox_; }
  Journal& journal() { return *journal_; }
  Enforcer* enforcer() { return enforcer_.get(); }
  DecisionEngine* engine() { return engine_.get(); }
  const std::vector<std::unique_ptr<Adversary>>& adversaries() const { return adversaries_; }
  const std::vector<Alarm>& alarms() const { return alarms_; }
  const std::optional<LinkerBaseline>& baseline() const { return baseline_; }
  const std::optional<TrainingResult>& model() const { return model_; }
  std::uint64_t windows_collected() const { return windows_; }
  double last_step() const { return last_step_; }

 private:
  void build(bool defenses);
  void dispatch(const Alarm& alarm, double t);
  std::string behavior_during(double from, double to) const;

  FrameworkConfig config_;
  std::unique_ptr<SandboxEnvironment> owned_env_;
  Host* host_ = nullptr;
  SandboxEnvironment* sandbox_ = nullptr;
  std::unique_ptr<Journal> journal_;
  std::unique_ptr<SyntheticSource> source_;
  std::unique_ptr<DecisionEngine> engine_;
  std::unique_ptr<Enforcer> enforcer_;
  AlarmQueue queue_;
  std::optional<TrainingResult> model_;
  std::optional<LinkerBaseline> baseline_;
  std::vector<std::unique_ptr<Adversary>> adversaries_;
  std::vector<std::string> profile_labels_;
  std::vector<Alarm> alarms_;
  std::function<void(double)> observer_;
  double next_window_end_ = kWindowSeconds;
  double last_step_ = -1.0;
  std::uint64_t steps_ = 0;
  std::uint64_t windows_ = 0;
  bool finished_ = false;
};

}  // namespace mtd
