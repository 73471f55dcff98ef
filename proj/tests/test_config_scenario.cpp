#include <doctest.h>

#include <json.hpp>

#include "mtd/config.hpp"
#include "mtd/error.hpp"
#include "mtd/framework.hpp"
#include "mtd/log.hpp"
#include "mtd/scenario.hpp"

using namespace mtd;

namespace {

constexpr const char* kInfected = R"(
name = "scripted"
seed = 1
duration_s = 150

[environment.network]
cidr = "192.168.1.0/24"

[[script]]
at = 100
behavior = "botnet_bashlite"
)";

}  // namespace

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(parse_framework_config("bogus = 1"), ConfigError);
  CHECK_THROWS_AS(parse_framework_config("seed = ["), ConfigError);
  CHECK_THROWS_AS(parse_framework_config("[reactive]\nthreshold = 0.5"), ConfigError);
  CHECK_THROWS_AS(parse_framework_config("[[script]]\nbehavior = \"x\""), ConfigError);
  CHECK_THROWS_AS(parse_framework_config("[[script]]\nat = 1\nbehavior = \"rootkit_beurk\"\naction = \"boot\""),
                  ConfigError);
  CHECK_THROWS_AS(parse_framework_config("[[proactive]]\nid = \"a\"\nmtds = [\"libraries\"]"), ConfigError);
  CHECK_THROWS_AS(parse_framework_config("[[proactive]]\nid = \"a\"\nevery_s = 10\nmtds = [\"teleport\"]"),
                  ConfigError);
}

TEST_CASE("duplicate policy rule refuses to start") {
  const char* text = R"(
[[policy]]
on = "Ransomware"
deploy = ["file_encryption"]

[[policy]]
on = "ransomware"
deploy = ["file_format"]
)";
  CHECK_THROWS_AS(parse_framework_config(text), ConfigError);
}

TEST_CASE("config values are applied") {
  auto c = parse_framework_config(R"(
name = "x"
seed = 9
duration_s = 30

[[proactive]]
id = "sweep"
every_s = 10
mtds = ["libraries"]

[[adversary]]
kind = "encryptor"
rate_files_per_s = 4
)");
  CHECK(c.name == "x");
  CHECK(c.seed == 9);
  CHECK(c.environment.seed == 9);
  REQUIRE(c.proactive.size() == 1);
  CHECK(c.proactive[0].every_s == 10.0);
  REQUIRE(c.adversaries.size() == 1);
  CHECK(c.adversaries[0].encryptor.rate_files_per_s == 4.0);
}

TEST_CASE("scripted infection triggers one alarm and one deployment") {
  std::vector<std::string> warnings;
  set_log_hook([&](std::string_view level, const std::string& msg) {
    if (level == "warning") warnings.push_back(msg);
  });
  Framework fw(parse_framework_config(kInfected));
  set_log_hook({});
  CHECK(std::any_of(warnings.begin(), warnings.end(),
                    [](const std::string& w) { return w.find("no model") != std::string::npos; }));
  CHECK_FALSE(fw.engine()->reactive_enabled());

  fw.run();
  REQUIRE(fw.alarms().size() == 1);
  CHECK(fw.alarms()[0].timestamp == 100.0);
  CHECK(fw.alarms()[0].behavior->name == "botnet_bashlite");
  REQUIRE(fw.enforcer()->outcomes().size() == 1);
  CHECK(fw.enforcer()->outcomes()[0].mechanism == "ip_address");
  CHECK(fw.enforcer()->outcomes()[0].status == OutcomeStatus::Mitigated);

  auto journal = parse_journal(fw.journal().text());
  CHECK(journal.alarms.size() == 1);
  CHECK(journal.outcomes.size() == 1);
  CHECK(std::count_if(journal.events.begin(), journal.events.end(), [](const auto& e) { return e.kind == "deploy"; }) == 1);
}

TEST_CASE("scenario report serialization") {
  auto c = parse_framework_config(kInfected);
  auto report = run_scenario(c);
  CHECK(report.all_checks_pass());
  const auto text = report_to_json(report);
  CHECK(text == report_to_json(run_scenario(c)));
  auto j = nlohmann::json::parse(text);
  CHECK(j["format"] == "mtd-report");
  CHECK(j["version"] == 1);
  CHECK(j["scenario"] == "scripted");
  CHECK(j["alarms"].size() == 1);
  CHECK(j["outcomes"].size() == 1);
  CHECK(report_to_table(report).find("ip_address") != std::string::npos);
}

TEST_CASE("seed override reaches the environment") {
  auto c = parse_framework_config(kInfected);
  override_seed(c, 77);
  CHECK(c.seed == 77);
  CHECK(c.environment.seed == 77);
}
