#include "mtd/ip_shuffle.hpp"

#include <algorithm>
#include <set>

#include "mtd/error.hpp"
#include "mtd/log.hpp"

namespace mtd {
namespace {

const std::string kActor = "mtd:ip_address";

}  // namespace

std::vector<Ipv4Address> enumerate_candidates(const Host& host) {
  const auto net = host.subnet();
  const auto active = host.scan_active_hosts();
  std::set<Ipv4Address> taken(active.begin(), active.end());
  taken.insert(host.gateway_ip());
  taken.insert(host.device_ip());
  std::vector<Ipv4Address> out;
  if (net.host_count() > 0) {
    for (std::uint64_t v = net.first_host().value; v <= net.last_host().value; ++v) {
      Ipv4Address a{static_cast<std::uint32_t>(v)};
      if (net.contains_host(a) && !taken.count(a)) out.push_back(a);
    }
  }
  if (out.empty()) throw ExhaustedError("no free address in " + net.to_string());
  return out;
}

void IpShuffleConfig::validate() const {
  if (!(attempt_cost_s >= 0.0) || !(base_cost_s >= 0.0)) throw ConfigError("ip_address costs must be non-negative");
}

MigrationResult migrate(Host& host, Rng& rng, const IpShuffleConfig& config) {
  HostActorScope actor(host, kActor);
  auto candidates = enumerate_candidates(host);
  MigrationResult r;
  r.old_ip = host.device_ip();
  r.candidates = candidates.size();
  while (!candidates.empty()) {
    const auto i = rng.below(candidates.size());
    const auto addr = candidates[i];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
    ++r.attempts;
    if (host.assign_ip(addr) != AssignResult::Assigned) continue;
    if (!host.check_connectivity()) {
      log_debug("no connectivity at " + addr.to_string());
      continue;
    }
    r.new_ip = addr;
    r.duration_s = config.base_cost_s + config.attempt_cost_s * static_cast<double>(r.attempts);
    host.restart_services("ip migration " + r.old_ip.to_string() + " -> " + addr.to_string());
    return r;
  }
  if (host.device_ip() != r.old_ip) host.assign_ip(r.old_ip);
  throw ExhaustedError("all " + std::to_string(r.candidates) + " candidate addresses lack connectivity");
}

IpShuffleMechanism::IpShuffleMechanism(Host& host, IpShuffleConfig config, std::uint64_t seed)
    : host_(host), config_(config), rng_(seed) {
  config_.validate();
}

void IpShuffleMechanism::start(const Alarm& trigger, double now) {
  running_ = true;
  started_ = now;
  reactive_ = trigger.origin == AlarmOrigin::Reactive;
  trigger_ = trigger.behavior ? "reactive:" + trigger.behavior->name : "proactive:" + trigger.source;
  last_.reset();
  failure_.clear();
  try {
    last_ = migrate(host_, rng_, config_);
    log_info("device migrated " + last_->old_ip.to_string() + " -> " + last_->new_ip.to_string());
  } catch (const ExhaustedError& e) {
    failure_ = e.what();
    log_error("ip migration failed: " + failure_);
  }
}

std::optional<MtdOutcome> IpShuffleMechanism::poll(double now) {
  if (!running_) return std::nullopt;
  if (last_ && now < started_ + last_->duration_s) return std::nullopt;
  return finish(now);
}

MtdOutcome IpShuffleMechanism::stop(double now) {
  if (!running_) throw ConfigError("ip shuffle mechanism is not running");
  return finish(now);
}

MtdOutcome IpShuffleMechanism::finish(double now) {
  running_ = false;
  MtdOutcome o;
  o.mechanism = std::string(to_string(id()));
  o.start = started_;
  o.end = std::max(started_, now);
  o.trigger = trigger_;
  if (!last_) {
    o.status = OutcomeStatus::Failed;
    o.metrics = {{"migrations", 0.0}};
    o.detail = failure_;
    return o;
  }
  o.metrics = {{"migrations", 1.0},
               {"attempts", static_cast<double>(last_->attempts)},
               {"candidates", static_cast<double>(last_->candidates)},
               {"duration_s", last_->duration_s}};
  o.status = reactive_ ? OutcomeStatus::Mitigated : OutcomeStatus::NoOp;
  o.detail = last_->old_ip.to_string() + " -> " + last_->new_ip.to_string();
  return o;
}

}  // namespace mtd
