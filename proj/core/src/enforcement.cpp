#include "mtd/enforcement.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mtd/error.hpp"
#include "mtd/journal.hpp"
#include "mtd/log.hpp"

namespace mtd {
namespace {

std::string normalize(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == ' ' || c == '-') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  return out;
}

std::string rule_key(std::string_view on) {
  auto key = normalize(on);
  if (auto fam = parse_family(key)) return std::string(to_string(*fam));
  return key;
}

}  // namespace

std::string_view to_string(MechanismId id) {
  switch (id) {
    case MechanismId::FileEncryption: return "file_encryption";
    case MechanismId::FileFormat: return "file_format";
    case MechanismId::Libraries: return "libraries";
    case MechanismId::IpAddress: return "ip_address";
  }
  return "unknown";
}

std::optional<MechanismId> parse_mechanism_id(std::string_view text) {
  auto key = normalize(text);
  if (key.size() > 4 && key.ends_with("_mtd")) key.resize(key.size() - 4);
  for (auto id : kAllMechanisms)
    if (key == to_string(id)) return id;
  return std::nullopt;
}

std::string_view to_string(OutcomeStatus status) {
  switch (status) {
    case OutcomeStatus::Mitigated: return "mitigated";
    case OutcomeStatus::NoOp: return "no-op";
    case OutcomeStatus::Failed: return "failed";
  }
  return "unknown";
}

std::optional<OutcomeStatus> parse_outcome_status(std::string_view text) {
  for (auto s : {OutcomeStatus::Mitigated, OutcomeStatus::NoOp, OutcomeStatus::Failed})
    if (text == to_string(s)) return s;
  return std::nullopt;
}

double MtdOutcome::metric(const std::string& name) const {
  auto it = metrics.find(name);
  return it == metrics.end() ? 0.0 : it->second;
}

bool MtdOutcome::has_nonzero_metric() const {
  return std::any_of(metrics.begin(), metrics.end(), [](const auto& kv) { return kv.second != 0.0; });
}

// --- policy ------------------------------------------------------------------

EnforcementPolicy::EnforcementPolicy(std::vector<PolicyRule> rules) : rules_(std::move(rules)) {
  std::set<std::string> keys;
  for (const auto& r : rules_) {
    auto key = rule_key(r.on);
    if (key.empty()) throw ConfigError("policy rule with empty 'on'");
    if (!keys.insert(key).second) throw ConfigError("duplicate policy rule for '" + r.on + "'");
    for (const auto& m : r.deploy)
      if (!parse_mechanism_id(m)) throw ConfigError("policy rule '" + r.on + "' names unknown mechanism '" + m + "'");
  }
}

EnforcementPolicy EnforcementPolicy::standard() {
  return EnforcementPolicy({
      {"Rootkit", {"libraries"}},
      {"Ransomware", {"file_encryption"}},
      {"Botnet", {"ip_address"}},
      {"Backdoor", {"file_format"}},
      {"Proactive", {"file_format", "ip_address", "libraries"}},
  });
}

DeploymentPlan EnforcementPolicy::resolve(const Alarm& alarm) const {
  auto find_rule = [&](std::string_view key) -> const PolicyRule* {
    for (const auto& r : rules_)
      if (rule_key(r.on) == key) return &r;
    return nullptr;
  };

  if (alarm.origin == AlarmOrigin::Proactive) {
    if (!alarm.mtds.empty()) return {alarm.mtds, "proactive:" + alarm.source};
    if (const auto* r = find_rule("proactive")) return {r->deploy, r->on};
    log_warn("proactive alarm from '" + alarm.source + "' matches no policy rule");
    return {};
  }

  if (!alarm.behavior) return {};
  const auto label = normalize(alarm.behavior->name);
  const auto family = std::string(to_string(alarm.behavior->family));
  for (const auto& r : rules_) {
    const auto key = rule_key(r.on);
    if (key == label || key == family) return {r.deploy, r.on};
  }
  if (const auto* r = find_rule("default")) return {r->deploy, r->on};
  log_warn("no policy rule for behavior '" + alarm.behavior->name + "'");
  return {};
}

// --- enforcer ----------------------------------------------------------------

Enforcer::Enforcer(EnforcementPolicy policy, Journal* journal) : policy_(std::move(policy)), journal_(journal) {}

void Enforcer::register_mechanism(std::unique_ptr<Mechanism> mechanism) {
  if (!mechanism) throw ConfigError("cannot register a null mechanism");
  const auto id = mechanism->id();
  mechanisms_[id] = std::move(mechanism);
}

Mechanism* Enforcer::mechanism(MechanismId id) const {
  auto it = mechanisms_.find(id);
  return it == mechanisms_.end() ? nullptr : it->second.get();
}

std::uint64_t Enforcer::deploy(const DeploymentPlan& plan, const Alarm& alarm, double now) {
  std::vector<MechanismId> ids;
  for (const auto& name : plan.mechanisms) {
    auto id = parse_mechanism_id(name);
    if (!id) throw ConfigError("unknown mechanism '" + name + "' in deployment plan");
    if (!mechanisms_.count(*id)) throw ConfigError("mechanism '" + name + "' is not registered");
    if (std::find(ids.begin(), ids.end(), *id) == ids.end()) ids.push_back(*id);
  }

  Deployment dep;
  for (auto id : ids) {
    if (running_in_.count(id) || mechanisms_.at(id)->running()) {
      ++coalesced_;
      if (journal_) journal_->record_event(now, "coalesced", std::string(to_string(id)));
      log_info(std::string(to_string(id)) + " already running; coalesced");
      continue;
    }
    dep.order.push_back(id);
  }
  if (dep.order.empty()) return 0;

  dep.id = next_id_++;
  for (auto id : dep.order) {
    mechanisms_.at(id)->start(alarm, now);
    running_in_[id] = dep.id;
    dep.results[id] = std::nullopt;
  }
  if (journal_) {
    std::string names;
    for (auto id : dep.order) names += (names.empty() ? "" : ",") + std::string(to_string(id));
    journal_->record_event(now, "deploy", "#" + std::to_string(dep.id) + " " + names);
  }
  deployments_.push_back(std::move(dep));
  return deployments_.back().id;
}

std::vector<MtdOutcome> Enforcer::handle(const Alarm& alarm, double now) {
  if (journal_) journal_->record_alarm(alarm);
  deploy(resolve(alarm), alarm, now);
  return poll(now);
}

std::vector<MtdOutcome> Enforcer::poll(double now) {
  for (auto& [id, dep_id] : running_in_) {
    auto outcome = mechanisms_.at(id)->poll(now);
    if (!outcome) continue;
    outcome->deployment = dep_id;
    auto dep = std::find_if(deployments_.begin(), deployments_.end(), [&](const auto& d) { return d.id == dep_id; });
    dep->results[id] = std::move(*outcome);
  }
  std::erase_if(running_in_, [&](const auto& kv) {
    auto dep = std::find_if(deployments_.begin(), deployments_.end(), [&](const auto& d) { return d.id == kv.second; });
    return dep->results.at(kv.first).has_value();
  });
  return collect();
}

std::vector<MtdOutcome> Enforcer::shutdown(double now) {
  for (auto& [id, dep_id] : running_in_) {
    auto outcome = mechanisms_.at(id)->stop(now);
    outcome.deployment = dep_id;
    auto dep = std::find_if(deployments_.begin(), deployments_.end(), [&](const auto& d) { return d.id == dep_id; });
    dep->results[id] = std::move(outcome);
  }
  running_in_.clear();
  return collect();
}

std::vector<MtdOutcome> Enforcer::collect() {
  std::vector<MtdOutcome> done;
  std::erase_if(deployments_, [&](Deployment& dep) {
    const bool complete = std::all_of(dep.results.begin(), dep.results.end(), [](const auto& kv) { return kv.second.has_value(); });
    if (!complete) return false;
    for (auto id : dep.order) done.push_back(std::move(*dep.results.at(id)));
    return true;
  });
  for (const auto& o : done) {
    if (journal_) journal_->record_outcome(o);
    outcomes_.push_back(o);
  }
  return done;
}

bool Enforcer::busy() const { return !running_in_.empty(); }

}  // namespace mtd
