#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtd/decision.hpp"

namespace mtd {

class Journal;

enum class MechanismId { FileEncryption, FileFormat, Libraries, IpAddress };
inline constexpr MechanismId kAllMechanisms[] = {MechanismId::FileEncryption, MechanismId::FileFormat,
                                                 MechanismId::Libraries, MechanismId::IpAddress};

/// Canonical ids: file_encryption, file_format, libraries, ip_address.
std::string_view to_string(MechanismId id);
/// Case-insensitive; accepts "Libraries MTD", "IP Address", "file-format".
std::optional<MechanismId> parse_mechanism_id(std::string_view text);

enum class OutcomeStatus { Mitigated, NoOp, Failed };
std::string_view to_string(OutcomeStatus status);
std::optional<OutcomeStatus> parse_outcome_status(std::string_view text);

struct MtdOutcome {
  std::string mechanism;
  std::uint64_t deployment = 0;
  double start = 0.0;
  double end = 0.0;
  OutcomeStatus status = OutcomeStatus::NoOp;
  std::map<std::string, double> metrics;
  std::string trigger;
  std::string detail;

  double metric(const std::string& name) const;
  bool has_nonzero_metric() const;
};

struct PolicyRule {
  /// Family name (Rootkit, Ransomware, Botnet, Backdoor, DataLeak), exact
  /// class label, "Proactive" or "Default".
  std::string on;
  std::vector<std::string> deploy;
};

struct DeploymentPlan {
  std::vector<std::string> mechanisms;
  /// Rule that produced the plan, empty when nothing matched.
  std::string matched;
};

/// Ordered rule list. First matching rule in declaration order wins.
class EnforcementPolicy {
 public:
  EnforcementPolicy() = default;
  /// Throws ConfigError on duplicate match keys, empty keys or unknown
  /// mechanism ids.
  explicit EnforcementPolicy(std::vector<PolicyRule> rules);

  /// Rootkit->libraries, Ransomware->file_encryption, Botnet->ip_address,
  /// Backdoor->file_format, Proactive->file_format+ip_address+libraries.
  static EnforcementPolicy standard();

  /// Pure. Proactive alarms carrying a target set deploy that set; other
  /// proactive alarms use the Proactive rule. Reactive alarms match on exact
  /// label or family, falling back to Default, else an empty plan.
  DeploymentPlan resolve(const Alarm& alarm) const;
  const std::vector<PolicyRule>& rules() const { return rules_; }

 private:
  std::vector<PolicyRule> rules_;
};

/// A deployable defense. Runs advance in virtual time through poll().
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual MechanismId id() const = 0;
  /// Begins a run. Called only while idle.
  virtual void start(const Alarm& trigger, double now) = 0;
  /// Advances the run; returns the outcome once it has finished.
  virtual std::optional<MtdOutcome> poll(double now) = 0;
  /// Ends a running instance early and returns its outcome.
  virtual MtdOutcome stop(double now) = 0;
  virtual bool running() const = 0;
};

/// Resolves alarms to plans, runs mechanisms single-flight and journals
/// outcomes per deployment in plan order.
class Enforcer {
 public:
  explicit Enforcer(EnforcementPolicy policy, Journal* journal = nullptr);

  void register_mechanism(std::unique_ptr<Mechanism> mechanism);
  Mechanism* mechanism(MechanismId id) const;
  const EnforcementPolicy& policy() const { return policy_; }

  DeploymentPlan resolve(const Alarm& alarm) const { return policy_.resolve(alarm); }
  /// Validates every id first (ConfigError, nothing started), then starts the
  /// idle mechanisms in plan order. Running ones are coalesced. Returns the
  /// deployment id, or 0 when nothing was started.
  std::uint64_t deploy(const DeploymentPlan& plan, const Alarm& alarm, double now);
  /// Journals the alarm, resolves and deploys it, then polls.
  std::vector<MtdOutcome> handle(const Alarm& alarm, double now);
  /// Outcomes of deployments that completed by `now`.
  std::vector<MtdOutcome> poll(double now);
  /// Stops every running mechanism and flushes the remaining deployments.
  std::vector<MtdOutcome> shutdown(double now);

  bool busy() const;
  const std::vector<MtdOutcome>& outcomes() const { return outcomes_; }
  std::uint64_t coalesced() const { return coalesced_; }

 private:
  struct Deployment {
    std::uint64_t id = 0;
    std::vector<MechanismId> order;
    std::map<MechanismId, std::optional<MtdOutcome>> results;
  };
  std::vector<MtdOutcome> collect();

  EnforcementPolicy policy_;
  Journal* journal_;
  std::map<MechanismId, std::unique_ptr<Mechanism>> mechanisms_;
  std::map<MechanismId, std::uint64_t> running_in_;
  std::vector<Deployment> deployments_;
  std::vector<MtdOutcome> outcomes_;
  std::uint64_t next_id_ = 1;
  std::uint64_t coalesced_ = 0;
};

}  // namespace mtd
