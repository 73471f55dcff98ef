#include <doctest.h>

#include "mtd/enforcement.hpp"
#include "mtd/error.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/journal.hpp"
#include "support.hpp"

using namespace mtd;

namespace {

// Runs for `length` seconds and reports mitigated with one metric.
class FakeMechanism final : public Mechanism {
 public:
  FakeMechanism(MechanismId id, double length) : id_(id), length_(length) {}
  MechanismId id() const override { return id_; }
  void start(const Alarm&, double now) override {
    running_ = true;
    started_ = now;
    ++starts;
  }
  std::optional<MtdOutcome> poll(double now) override {
    if (now < started_ + length_) return std::nullopt;
    return stop(now);
  }
  MtdOutcome stop(double now) override {
    running_ = false;
    MtdOutcome o;
    o.mechanism = std::string(to_string(id_));
    o.start = started_;
    o.end = now;
    o.status = OutcomeStatus::Mitigated;
    o.metrics["work"] = 1;
    return o;
  }
  bool running() const override { return running_; }
  int starts = 0;

 private:
  MechanismId id_;
  double length_;
  bool running_ = false;
  double started_ = 0;
};

Alarm proactive(double t) {
  Alarm a;
  a.timestamp = t;
  a.source = "sweep";
  return a;
}

}  // namespace

TEST_CASE("standard policy resolution") {
  auto p = EnforcementPolicy::standard();
  CHECK(p.resolve(Alarm::reactive("rootkit_beurk", 1, 0)).mechanisms == std::vector<std::string>{"libraries"});
  CHECK(p.resolve(Alarm::reactive("ransomware_poc", 1, 0)).mechanisms == std::vector<std::string>{"file_encryption"});
  CHECK(p.resolve(Alarm::reactive("botnet_bashlite", 1, 0)).mechanisms == std::vector<std::string>{"ip_address"});
  CHECK(p.resolve(Alarm::reactive("dataleak_thetick", 1, 0)).mechanisms == std::vector<std::string>{"file_format"});
  CHECK(p.resolve(proactive(0)).mechanisms == std::vector<std::string>{"file_format", "ip_address", "libraries"});
  CHECK(EnforcementPolicy().resolve(Alarm::reactive("ransomware_poc", 1, 0)).mechanisms.empty());
}

TEST_CASE("policy rules") {
  EnforcementPolicy p({{"ransomware_poc", {"file_format"}}, {"Ransomware", {"file_encryption"}}, {"Default", {"ip_address"}}});
  CHECK(p.resolve(Alarm::reactive("ransomware_poc", 1, 0)).mechanisms == std::vector<std::string>{"file_format"});
  CHECK(p.resolve(Alarm::reactive("ransomware_other", 1, 0)).mechanisms == std::vector<std::string>{"file_encryption"});
  CHECK(p.resolve(Alarm::reactive("botnet_bashlite", 1, 0)).mechanisms == std::vector<std::string>{"ip_address"});
  Alarm with_targets = proactive(0);
  with_targets.mtds = {"libraries"};
  CHECK(p.resolve(with_targets).mechanisms == std::vector<std::string>{"libraries"});
  CHECK_THROWS_AS(EnforcementPolicy({{"Rootkit", {"libraries"}}, {"rootkit", {"ip_address"}}}), ConfigError);
  CHECK_THROWS_AS(EnforcementPolicy(std::vector<PolicyRule>{{"Rootkit", {"warp_drive"}}}), ConfigError);
}

TEST_CASE("mechanism ids") {
  CHECK(parse_mechanism_id("Libraries MTD") == MechanismId::Libraries);
  CHECK(parse_mechanism_id("IP Address") == MechanismId::IpAddress);
  CHECK(parse_mechanism_id("file-format") == MechanismId::FileFormat);
  CHECK_FALSE(parse_mechanism_id("nope").has_value());
}

TEST_CASE("ip deployment outcome depends on the trigger") {
  auto env = test::make_env();
  Enforcer enf(EnforcementPolicy::standard());
  enf.register_mechanism(std::make_unique<IpShuffleMechanism>(env, IpShuffleConfig{}, 1));

  auto done = enf.handle(Alarm::reactive("botnet_bashlite", 1, 0), 0);
  CHECK(done.empty());
  done = enf.poll(100);
  REQUIRE(done.size() == 1);
  CHECK(done[0].status == OutcomeStatus::Mitigated);
  CHECK(done[0].metric("migrations") == 1);

  Alarm a = proactive(200);
  a.mtds = {"ip_address"};
  enf.handle(a, 200);
  done = enf.poll(300);
  REQUIRE(done.size() == 1);
  CHECK(done[0].status == OutcomeStatus::NoOp);
  CHECK(done[0].metric("migrations") == 1);
}

TEST_CASE("concurrent deployment of one mechanism coalesces") {
  Journal journal;
  Enforcer enf(EnforcementPolicy::standard(), &journal);
  auto fake = std::make_unique<FakeMechanism>(MechanismId::Libraries, 10);
  auto* raw = fake.get();
  enf.register_mechanism(std::move(fake));
  enf.handle(Alarm::reactive("rootkit_beurk", 1, 0), 0);
  enf.handle(Alarm::reactive("rootkit_bdvl", 1, 2), 2);
  CHECK(raw->starts == 1);
  CHECK(enf.coalesced() == 1);
  enf.poll(10);
  CHECK(enf.outcomes().size() == 1);
  CHECK_FALSE(enf.busy());
  auto parsed = parse_journal(journal.text());
  CHECK(parsed.alarms.size() == 2);
  CHECK(parsed.outcomes.size() == 1);
}

TEST_CASE("unknown mechanism is rejected before anything starts") {
  Enforcer enf(EnforcementPolicy::standard());
  auto fake = std::make_unique<FakeMechanism>(MechanismId::Libraries, 1);
  auto* raw = fake.get();
  enf.register_mechanism(std::move(fake));
  CHECK_THROWS_AS(enf.deploy({{"libraries", "warp_drive"}, "x"}, proactive(0), 0), ConfigError);
  CHECK_THROWS_AS(enf.deploy({{"libraries", "ip_address"}, "x"}, proactive(0), 0), ConfigError);  // not registered
  CHECK(raw->starts == 0);
  CHECK_FALSE(enf.busy());
}

TEST_CASE("a deployment completes when all its mechanisms do") {
  Enforcer enf(EnforcementPolicy::standard());
  enf.register_mechanism(std::make_unique<FakeMechanism>(MechanismId::Libraries, 1));
  enf.register_mechanism(std::make_unique<FakeMechanism>(MechanismId::IpAddress, 5));
  enf.register_mechanism(std::make_unique<FakeMechanism>(MechanismId::FileFormat, 3));
  enf.handle(proactive(0), 0);
  CHECK(enf.poll(2).empty());
  auto done = enf.poll(5);
  REQUIRE(done.size() == 3);
  CHECK(done[0].mechanism == "file_format");
  CHECK(done[0].deployment == done[2].deployment);
}

TEST_CASE("shutdown stops running mechanisms") {
  Enforcer enf(EnforcementPolicy::standard());
  enf.register_mechanism(std::make_unique<FakeMechanism>(MechanismId::Libraries, 100));
  enf.handle(Alarm::reactive("rootkit_beurk", 1, 0), 0);
  auto done = enf.shutdown(7);
  REQUIRE(done.size() == 1);
  CHECK(done[0].end == 7);
  CHECK_FALSE(enf.busy());
}

TEST_CASE("journal lines parse back") {
  Journal j;
  j.record_alarm(Alarm::reactive("botnet_bashlite", 0.9, 5));
  MtdOutcome o;
  o.mechanism = "ip_address";
  o.start = 5;
  o.end = 17;
  o.status = OutcomeStatus::Mitigated;
  o.metrics["attempts"] = 1;
  j.record_outcome(o);
  j.record_event(5, "deploy", "#1 ip_address");
  auto back = parse_journal(j.text());
  REQUIRE(back.alarms.size() == 1);
  CHECK(back.alarms[0].behavior->name == "botnet_bashlite");
  CHECK(*back.alarms[0].confidence == doctest::Approx(0.9));
  REQUIRE(back.outcomes.size() == 1);
  CHECK(back.outcomes[0].metric("attempts") == 1);
  CHECK(back.events.size() == 1);
  CHECK_THROWS_AS(parse_journal("{\"type\":\"alarm\"}\nnot json\n"), FormatError);
}
