#pragma once

#include <condition_variable>
#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mtd/classifier.hpp"
#include "mtd/labels.hpp"
#include "mtd/telemetry.hpp"

namespace mtd {

enum class AlarmOrigin { Proactive, Reactive };
std::string_view to_string(AlarmOrigin origin);

struct Alarm {
  AlarmOrigin origin = AlarmOrigin::Proactive;
  /// Present iff reactive.
  std::optional<BehaviorLabel> behavior;
  std::optional<double> confidence;
  double timestamp = 0.0;
  /// Proactive rule that fired, or "reactive" / "scripted".
  std::string source;
  /// Target set of the proactive rule; empty for reactive alarms.
  std::vector<std::string> mtds;

  static Alarm reactive(const std::string& label, double confidence, double timestamp, std::string source = "reactive");
};

/// Exactly one of every_s / on_action is set.
struct ProactiveRule {
  std::string id;
  std::optional<double> every_s;
  std::optional<std::string> on_action;
  std::vector<std::string> mtds;
};

struct ReactiveConfig {
  std::string model_path;
  std::string scaler_path;
  double threshold = 0.5;
  std::map<std::string, double> label_thresholds;
  double suppress_s = 30.0;
};

/// Throws ConfigError on duplicate ids, missing/ambiguous triggers or a
/// non-positive interval.
void validate_rules(const std::vector<ProactiveRule>& rules);

/// Proactive scheduler plus reactive classification gate.
class DecisionEngine {
 public:
  explicit DecisionEngine(std::vector<ProactiveRule> rules = {}, ReactiveConfig reactive = {}, double start_time = 0.0);

  void load_model(std::shared_ptr<const Model> model, Scaler scaler);
  bool reactive_enabled() const { return model_ != nullptr; }
  const ReactiveConfig& reactive_config() const { return reactive_; }
  const std::vector<ProactiveRule>& rules() const { return rules_; }

  /// Queues a named action event; matching rules fire on the next tick.
  void post_action(const std::string& name);

  /// One alarm per periodic boundary k*interval crossed in (previous, now],
  /// plus one per posted action. Ordered by time, then rule id.
  /// Throws ClockError when `now` precedes the previous tick.
  std::vector<Alarm> tick(double now);

  /// Scales and classifies `vector`; the alarm is stamped at the end of the
  /// vector's window. Throws NotConfigured without a model.
  std::optional<Alarm> reactive_step(const FeatureVector& vector);
  /// Classification result of the last reactive_step, alarm or not.
  const std::optional<Prediction>& last_prediction() const { return last_prediction_; }

  double threshold_for(const std::string& label) const;

 private:
  std::vector<ProactiveRule> rules_;
  ReactiveConfig reactive_;
  double last_tick_;
  std::vector<std::string> pending_actions_;
  std::shared_ptr<const Model> model_;
  Scaler scaler_;
  std::map<std::string, double> last_alarm_at_;
  std::optional<Prediction> last_prediction_;
};

/// Number of multiples of `interval` in (from, to], robust to rounding.
std::uint64_t boundaries_crossed(double from, double to, double interval);

/// Serialized, thread-safe alarm channel between decision and enforcement.
class AlarmQueue {
 public:
  void push(Alarm alarm);
  std::optional<Alarm> try_pop();
  /// Waits up to `timeout`; returns nullopt on timeout or once closed and empty.
  std::optional<Alarm> pop_wait(std::chrono::milliseconds timeout);
  std::vector<Alarm> drain();
  void close();
  bool closed() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Alarm> queue_;
  bool closed_ = false;
};

}  // namespace mtd
