#include "mtd/decision.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mtd/error.hpp"
#include "mtd/log.hpp"

namespace mtd {

std::string_view to_string(AlarmOrigin origin) {
  return origin == AlarmOrigin::Proactive ? "proactive" : "reactive";
}

Alarm Alarm::reactive(const std::string& label, double confidence, double timestamp, std::string source) {
  Alarm a;
  a.origin = AlarmOrigin::Reactive;
  a.behavior = BehaviorLabel::from_name(label);
  a.confidence = confidence;
  a.timestamp = timestamp;
  a.source = std::move(source);
  return a;
}

void validate_rules(const std::vector<ProactiveRule>& rules) {
  std::set<std::string> ids;
  for (const auto& r : rules) {
    if (r.id.empty()) throw ConfigError("proactive rule without id");
    if (!ids.insert(r.id).second) throw ConfigError("duplicate proactive rule id '" + r.id + "'");
    if (r.every_s.has_value() == r.on_action.has_value())
      throw ConfigError("proactive rule '" + r.id + "' needs exactly one of every_s or on_action");
    if (r.every_s && !(*r.every_s > 0.0 && std::isfinite(*r.every_s)))
      throw ConfigError("proactive rule '" + r.id + "' interval must be positive");
    if (r.on_action && r.on_action->empty()) throw ConfigError("proactive rule '" + r.id + "' has an empty action name");
  }
}

namespace {

// Largest k with k * interval <= t.
std::int64_t boundary_index(double t, double interval) {
  auto k = static_cast<std::int64_t>(std::floor(t / interval));
  while (static_cast<double>(k + 1) * interval <= t) ++k;
  while (static_cast<double>(k) * interval > t) --k;
  return k;
}

}  // namespace

std::uint64_t boundaries_crossed(double from, double to, double interval) {
  if (to <= from) return 0;
  return static_cast<std::uint64_t>(boundary_index(to, interval) - boundary_index(from, interval));
}

DecisionEngine::DecisionEngine(std::vector<ProactiveRule> rules, ReactiveConfig reactive, double start_time)
    : rules_(std::move(rules)), reactive_(std::move(reactive)), last_tick_(start_time) {
  validate_rules(rules_);
  std::sort(rules_.begin(), rules_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (!(reactive_.threshold >= 0.0 && reactive_.threshold <= 1.0)) throw ConfigError("reactive threshold must lie in [0, 1]");
  for (const auto& [label, t] : reactive_.label_thresholds)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("threshold for '" + label + "' must lie in [0, 1]");
  if (reactive_.suppress_s < 0.0) throw ConfigError("suppress_s must be non-negative");
}

void DecisionEngine::load_model(std::shared_ptr<const Model> model, Scaler scaler) {
  if (!model) throw ConfigError("load_model: null model");
  if (scaler.feature_count() != model->n_features())
    throw ConfigError("scaler has " + std::to_string(scaler.feature_count()) + " features, model expects " +
                      std::to_string(model->n_features()));
  model_ = std::move(model);
  scaler_ = std::move(scaler);
}

void DecisionEngine::post_action(const std::string& name) { pending_actions_.push_back(name); }

std::vector<Alarm> DecisionEngine::tick(double now) {
  if (now < last_tick_) throw ClockError("decision tick moved backwards");
  std::vector<Alarm> out;
  for (const auto& rule : rules_) {
    if (rule.every_s) {
      const double dt = *rule.every_s;
      const auto last = boundary_index(now, dt);
      for (auto k = boundary_index(last_tick_, dt) + 1; k <= last; ++k) {
        Alarm a;
        a.origin = AlarmOrigin::Proactive;
        a.timestamp = std::min(now, static_cast<double>(k) * dt);
        a.source = rule.id;
        a.mtds = rule.mtds;
        out.push_back(std::move(a));
      }
    } else {
      for (const auto& action : pending_actions_) {
        if (action != *rule.on_action) continue;
        Alarm a;
        a.origin = AlarmOrigin::Proactive;
        a.timestamp = now;
        a.source = rule.id;
        a.mtds = rule.mtds;
        out.push_back(std::move(a));
      }
    }
  }
  for (const auto& action : pending_actions_) {
    bool matched = std::any_of(rules_.begin(), rules_.end(), [&](const auto& r) { return r.on_action == action; });
    if (!matched) log_debug("action '" + action + "' matches no proactive rule");
  }
  pending_actions_.clear();
  std::stable_sort(out.begin(), out.end(), [](const Alarm& a, const Alarm& b) { return a.timestamp < b.timestamp; });
  last_tick_ = now;
  return out;
}

double DecisionEngine::threshold_for(const std::string& label) const {
  auto it = reactive_.label_thresholds.find(label);
  return it == reactive_.label_thresholds.end() ? reactive_.threshold : it->second;
}

std::optional<Alarm> DecisionEngine::reactive_step(const FeatureVector& vector) {
  if (!model_) throw NotConfigured("reactive path has no model loaded");
  const auto scaled = minmax_apply(scaler_, std::span<const double>(vector.features));
  auto prediction = model_->predict(scaled);
  last_prediction_ = prediction;
  const auto label = BehaviorLabel::from_name(prediction.label);
  if (label.is_normal()) return std::nullopt;
  if (prediction.confidence < threshold_for(prediction.label)) return std::nullopt;
  const double at = vector.window_start + kWindowSeconds;
  if (auto it = last_alarm_at_.find(prediction.label); it != last_alarm_at_.end() && at - it->second < reactive_.suppress_s)
    return std::nullopt;
  last_alarm_at_[prediction.label] = at;
  return Alarm::reactive(prediction.label, prediction.confidence, at);
}

// --- AlarmQueue --------------------------------------------------------------

void AlarmQueue::push(Alarm alarm) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    queue_.push_back(std::move(alarm));
  }
  cv_.notify_one();
}

std::optional<Alarm> AlarmQueue::try_pop() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  auto a = std::move(queue_.front());
  queue_.pop_front();
  return a;
}

std::optional<Alarm> AlarmQueue::pop_wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto a = std::move(queue_.front());
  queue_.pop_front();
  return a;
}

std::vector<Alarm> AlarmQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<Alarm> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

void AlarmQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool AlarmQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::size_t AlarmQueue::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

}  // namespace mtd
