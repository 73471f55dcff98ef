#include "mtd/framework.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "mtd/error.hpp"
#include "mtd/file_format.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/log.hpp"
#include "mtd/ransomware_trap.hpp"

namespace mtd {

std::vector<BehaviorProfile> select_profiles(const ProfileOptions& options, const std::vector<std::string>& classes) {
  auto all = default_profiles(options);
  if (classes.empty()) return all;
  std::vector<BehaviorProfile> out;
  for (const auto& name : classes) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& p) { return p.label == name; });
    if (it == all.end()) throw ConfigError("unknown behavior class '" + name + "'");
    if (std::any_of(out.begin(), out.end(), [&](const auto& p) { return p.label == name; }))
      throw ConfigError("duplicate behavior class '" + name + "'");
    out.push_back(*it);
  }
  for (auto& p : out) {
    const bool present = std::any_of(out.begin(), out.end(), [&](const auto& q) { return q.label == p.mimic_label; });
    if (!present) {
      p.mimic_label.clear();
      p.mimic_probability = 0.0;
    }
  }
  return out;
}

TrainingResult run_training(const TrainConfig& config, std::uint64_t seed) {
  Dataset data = config.dataset_path.empty()
                     ? generate_dataset(select_profiles(config.profiles, config.classes), config.n_per_class,
                                        mix_seed(seed, 11))
                     : load_dataset_csv(config.dataset_path);
  auto [train, test] = split(data, config.train_fraction, mix_seed(seed, 12));
  TrainingResult r;
  r.scaler = minmax_fit(train);
  const auto train_s = minmax_apply(r.scaler, train);
  const auto test_s = minmax_apply(r.scaler, test);
  switch (config.algo) {
    case Algorithm::Forest:
      r.model = std::make_shared<const Model>(train_forest(train_s, config.forest, mix_seed(seed, 13)));
      break;
    case Algorithm::Tree:
      r.model = std::make_shared<const Model>(train_tree(train_s, config.forest.tree));
      break;
    case Algorithm::Knn:
      r.model = std::make_shared<const Model>(train_knn(train_s, config.knn_k));
      break;
  }
  r.report = evaluate(*r.model, test_s);
  r.train_size = train.vectors.size();
  r.test_size = test.vectors.size();
  return r;
}

std::vector<std::unique_ptr<Adversary>> make_adversaries(const std::vector<AdversarySpec>& specs, std::uint64_t seed) {
  std::vector<std::unique_ptr<Adversary>> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.kind == "encryptor") {
      auto a = std::make_unique<Encryptor>(s.encryptor);
      if (!s.label.empty()) a->set_label(s.label);
      out.push_back(std::move(a));
    } else if (s.kind == "exfiltrator") {
      auto a = std::make_unique<Exfiltrator>(s.exfiltrator);
      if (!s.label.empty()) a->set_label(s.label);
      out.push_back(std::move(a));
    } else if (s.kind == "rootkit") {
      auto params = s.rootkit;
      if (s.inject_range) {
        Rng rng(mix_seed(seed, 0x100 + i));
        const auto [lo, hi] = *s.inject_range;
        params.inject_at = lo + rng.uniform() * (hi - lo);
      }
      auto a = std::make_unique<Rootkit>(params);
      if (!s.label.empty()) a->set_label(s.label);
      out.push_back(std::move(a));
    } else if (s.kind == "botnet") {
      auto a = std::make_unique<Botnet>(s.botnet);
      if (!s.label.empty()) a->set_label(s.label);
      out.push_back(std::move(a));
    } else {
      throw ConfigError("unknown adversary kind '" + s.kind + "'");
    }
  }
  return out;
}

Framework::Framework(FrameworkConfig config, bool defenses, std::optional<TrainingResult> model)
    : config_(std::move(config)), model_(std::move(model)) {
  config_.validate();
  if (config_.backend != "sandbox") throw ConfigError("this constructor only builds the sandbox backend");
  owned_env_ = std::make_unique<SandboxEnvironment>(SandboxEnvironment::create(config_.environment));
  host_ = sandbox_ = owned_env_.get();
  adversaries_ = make_adversaries(config_.adversaries, config_.seed);
  build(defenses);
}

Framework::Framework(FrameworkConfig config, Host& host, std::optional<TrainingResult> model)
    : config_(std::move(config)), host_(&host), model_(std::move(model)) {
  config_.validate();
  if (!config_.adversaries.empty()) log_warn("adversary emulators only run on the sandbox backend; ignoring them");
  build(true);
}

Framework::~Framework() = default;

void Framework::build(bool defenses) {
  journal_ = config_.journal_path.empty() ? std::make_unique<Journal>() : std::make_unique<Journal>(config_.journal_path);
  auto profiles = select_profiles(config_.telemetry, {});
  for (const auto& p : profiles) profile_labels_.push_back(p.label);
  for (const auto& a : adversaries_)
    if (std::find(profile_labels_.begin(), profile_labels_.end(), a->label()) == profile_labels_.end())
      throw ConfigError("adversary label '" + a->label() + "' has no telemetry profile");
  source_ = std::make_unique<SyntheticSource>(std::move(profiles), mix_seed(config_.seed, 1), 0.0);
  if (!defenses) return;

  engine_ = std::make_unique<DecisionEngine>(config_.proactive, config_.reactive ? config_.reactive->config : ReactiveConfig{},
                                             0.0);
  if (config_.reactive) {
    if (!model_) {
      if (config_.reactive->train_inline) {
        auto train = config_.reactive->train;
        train.profiles = config_.telemetry;
        model_ = run_training(train, mix_seed(config_.seed, 5));
      } else {
        try {
          TrainingResult r;
          r.model = std::make_shared<const Model>(load_model(config_.reactive->config.model_path));
          r.scaler = load_scaler(config_.reactive->config.scaler_path);
          model_ = std::move(r);
        } catch (const Error& e) {
          throw ConfigError(std::string("cannot load reactive model: ") + e.what());
        }
      }
    }
    if (model_->scaler.feature_count() != model_->model->n_features())
      throw ConfigError("scaler and model disagree on the feature count");
    engine_->load_model(model_->model, model_->scaler);
  } else {
    log_warn("no model configured; reactive path disabled");
  }

  enforcer_ = std::make_unique<Enforcer>(config_.enforcement_policy(), journal_.get());
  const auto& m = config_.mechanisms;
  enforcer_->register_mechanism(std::make_unique<TrapMechanism>(*host_, m.trap));
  enforcer_->register_mechanism(std::make_unique<FileFormatMechanism>(*host_, m.file_format, mix_seed(config_.seed, 2)));
  enforcer_->register_mechanism(std::make_unique<IpShuffleMechanism>(*host_, m.ip, mix_seed(config_.seed, 3)));
  const bool linker_known = sandbox_ ? config_.environment.linker.enabled : host_->exists(m.libraries.paths.preload_path);
  if (linker_known) {
    try {
      baseline_ = capture_baseline(*host_, m.libraries.paths);
      enforcer_->register_mechanism(std::make_unique<LibrariesMechanism>(*host_, *baseline_, m.libraries));
    } catch (const IntegrityError& e) {
      log_warn(std::string("libraries mechanism unavailable: ") + e.what());
    }
  }
}

std::string Framework::behavior_during(double from, double to) const {
  for (const auto& a : adversaries_)
    if (a->active_during(from, to)) return a->label();
  return std::string(labels::kNormal);
}

void Framework::dispatch(const Alarm& alarm, double t) {
  alarms_.push_back(alarm);
  try {
    enforcer_->handle(alarm, t);
  } catch (const ConfigError& e) {
    log_error(std::string("deployment rejected: ") + e.what());
    journal_->record_event(t, "deploy_error", e.what());
  }
}

void Framework::step(double t) {
  if (finished_) throw ConfigError("framework already finished");
  if (t < last_step_) throw ClockError("framework step went back in time");
  if (sandbox_ && t > sandbox_->now()) sandbox_->advance_to(t);

  while (t + 1e-9 >= next_window_end_) {
    const double from = next_window_end_ - kWindowSeconds;
    source_->set_behavior(behavior_during(from, next_window_end_));
    auto v = source_->collect_window(kWindowSeconds);
    ++windows_;
    if (engine_ && engine_->reactive_enabled())
      if (auto a = engine_->reactive_step(v)) queue_.push(std::move(*a));
    next_window_end_ += kWindowSeconds;
  }

  if (engine_) {
    for (const auto& e : config_.script) {
      if (!(e.at > last_step_ && e.at <= t)) continue;
      if (!e.behavior.empty())
        queue_.push(Alarm::reactive(e.behavior, 1.0, t, "scripted"));
      else
        engine_->post_action(e.action);
    }
    for (auto& a : engine_->tick(t)) queue_.push(std::move(a));
    for (const auto& a : queue_.drain()) dispatch(a, t);
    enforcer_->poll(t);
  }
  last_step_ = t;
  ++steps_;
  if (observer_) observer_(t);
}

void Framework::run(const RunControl& control) {
  const auto n = static_cast<std::uint64_t>(std::floor(config_.duration_s / config_.step_s + 1e-9));
  std::vector<Adversary*> advs;
  for (auto& a : adversaries_) advs.push_back(a.get());
  const auto wall_start = std::chrono::steady_clock::now();
  const auto first = steps_;
  for (auto i = steps_; i <= n; ++i) {
    if (control.stop && control.stop->load()) {
      log_info("stop requested; shutting down");
      break;
    }
    const double t = static_cast<double>(i) * config_.step_s;
    if (control.realtime) {
      std::this_thread::sleep_until(wall_start + std::chrono::duration<double>(static_cast<double>(i - first) * config_.step_s));
    }
    step(t);
    if (sandbox_ && i < n) run_adversaries(*sandbox_, advs, t + config_.step_s);
  }
  finish(std::max(last_step_, 0.0));
}

void Framework::finish(double t) {
  if (finished_) return;
  if (enforcer_) enforcer_->shutdown(t);
  journal_->flush();
  finished_ = true;
}

}  // namespace mtd
