#include <doctest.h>

#include <cmath>
#include <thread>

#include "mtd/decision.hpp"
#include "mtd/error.hpp"
#include "mtd/labels.hpp"
#include "support.hpp"

using namespace mtd;

namespace {

ProactiveRule every(std::string id, double s, std::vector<std::string> mtds = {"libraries"}) {
  ProactiveRule r;
  r.id = std::move(id);
  r.every_s = s;
  r.mtds = std::move(mtds);
  return r;
}

std::pair<std::shared_ptr<const Model>, Scaler> small_model() {
  auto data = generate_dataset(default_profiles(), 300, 21);
  auto scaler = minmax_fit(data);
  ForestParams fp;
  fp.n_trees = 20;
  return {std::make_shared<const Model>(train_forest(minmax_apply(scaler, data), fp, 4)), scaler};
}

}  // namespace

TEST_CASE("interval boundary") {
  DecisionEngine e({every("r", 60)});
  CHECK(e.tick(59).empty());
  auto a = e.tick(60);
  REQUIRE(a.size() == 1);
  CHECK(a[0].origin == AlarmOrigin::Proactive);
  CHECK(a[0].timestamp == 60.0);
  CHECK(a[0].source == "r");
}

TEST_CASE("rules due together fire in id order") {
  DecisionEngine e({every("zeta", 10), every("alpha", 5)});
  auto a = e.tick(10);
  REQUIRE(a.size() == 3);
  CHECK(a[0].source == "alpha");
  CHECK(a[0].timestamp == 5.0);
  CHECK(a[1].source == "alpha");
  CHECK(a[2].source == "zeta");
}

TEST_CASE("1035 s at 60 s gives 17 alarms") {
  DecisionEngine e({every("r", 60)});
  std::size_t n = 0;
  for (int t = 1; t <= 1035; ++t) n += e.tick(t).size();
  CHECK(n == 17);
}

TEST_CASE("proactive count equals floor(T / interval)") {
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const double interval = 0.5 + rng.uniform() * 100.0;
    const double T = rng.uniform() * 2000.0;
    DecisionEngine e({every("r", interval)});
    std::size_t n = 0;
    // Irregular tick spacing must not change the count.
    for (double t = 0; t < T;) {
      t = std::min(T, t + 0.1 + rng.uniform() * 7.0);
      n += e.tick(t).size();
    }
    CHECK(n == static_cast<std::size_t>(std::floor(T / interval)));
  }
}

TEST_CASE("action triggered rules") {
  ProactiveRule r;
  r.id = "on-boot";
  r.on_action = "boot";
  r.mtds = {"ip_address"};
  DecisionEngine e({r});
  CHECK(e.tick(1).empty());
  e.post_action("boot");
  e.post_action("unrelated");
  CHECK(e.tick(2).size() == 1);
  CHECK(e.tick(3).empty());
}

TEST_CASE("invalid rules") {
  CHECK_THROWS_AS(validate_rules({every("a", 10), every("a", 20)}), ConfigError);
  CHECK_THROWS_AS(validate_rules({every("a", 0)}), ConfigError);
  ProactiveRule both = every("b", 5);
  both.on_action = "x";
  CHECK_THROWS_AS(validate_rules({both}), ConfigError);
}

TEST_CASE("clock regression") {
  DecisionEngine e({every("r", 10)});
  e.tick(20);
  CHECK_THROWS_AS(e.tick(19), ClockError);
}

TEST_CASE("reactive path without a model") {
  DecisionEngine e;
  CHECK_FALSE(e.reactive_enabled());
  CHECK_THROWS_AS(e.reactive_step(FeatureVector{std::vector<double>(kDefaultFeatureCount, 0.0), 0.0, {}}), NotConfigured);
}

TEST_CASE("reactive hit and false alarm rates") {
  auto [model, scaler] = small_model();
  ReactiveConfig rc;
  rc.suppress_s = 0.0;
  DecisionEngine e({}, rc);
  e.load_model(model, scaler);
  SyntheticSource src(default_profiles(), 555);

  int false_alarms = 0;
  for (int i = 0; i < 400; ++i) false_alarms += e.reactive_step(src.collect_window(5.0)).has_value();
  CHECK(false_alarms < 20);

  src.set_behavior(std::string(labels::kRansomwarePoc));
  int hits = 0;
  for (int i = 0; i < 400; ++i) {
    auto a = e.reactive_step(src.collect_window(5.0));
    hits += a && a->behavior->family == Family::Ransomware;
  }
  CHECK(hits > 380);
}

TEST_CASE("confidence below threshold raises nothing") {
  const std::vector<std::string> classes{"normal", "ransomware_poc", "botnet_bashlite", "rootkit_beurk"};
  // 2 of 5 votes: confidence 0.4.
  auto model = std::make_shared<const Model>(test::voting_forest(classes, {1, 1, 0, 2, 3}, 2));
  Scaler s{{0, 0}, {1, 1}};
  const FeatureVector v{{0.5, 0.5}, 0.0, {}};

  ReactiveConfig strict;
  strict.threshold = 0.5;
  DecisionEngine a({}, strict);
  a.load_model(model, s);
  CHECK_FALSE(a.reactive_step(v).has_value());
  CHECK(a.last_prediction()->confidence == doctest::Approx(0.4));

  ReactiveConfig loose;
  loose.threshold = 0.3;
  DecisionEngine b({}, loose);
  b.load_model(model, s);
  auto alarm = b.reactive_step(v);
  REQUIRE(alarm.has_value());
  CHECK(alarm->behavior->name == "ransomware_poc");
  CHECK(alarm->timestamp == 5.0);
}

TEST_CASE("repeated detections are suppressed") {
  const std::vector<std::string> classes{"normal", "ransomware_poc"};
  auto model = std::make_shared<const Model>(test::voting_forest(classes, {1}, 1));
  ReactiveConfig rc;
  rc.suppress_s = 30.0;
  DecisionEngine e({}, rc);
  e.load_model(model, Scaler{{0}, {1}});
  int alarms = 0;
  for (int i = 0; i < 12; ++i) alarms += e.reactive_step(FeatureVector{{0.0}, 5.0 * i, {}}).has_value();
  CHECK(alarms == 2);  // at 5 s and 35 s
}

TEST_CASE("alarm queue") {
  AlarmQueue q;
  std::thread producer([&] {
    for (int i = 0; i < 100; ++i) q.push(Alarm::reactive("botnet_bashlite", 1.0, i));
    q.close();
  });
  std::size_t got = 0;
  double last = -1;
  while (auto a = q.pop_wait(std::chrono::milliseconds(500))) {
    CHECK(a->timestamp > last);
    last = a->timestamp;
    ++got;
  }
  producer.join();
  CHECK(got == 100);
  CHECK(q.closed());
}
