#include "mtd/journal.hpp"

#include <sstream>

#include <json.hpp>

#include "mtd/error.hpp"

namespace mtd {

using ojson = nlohmann::ordered_json;

namespace {

ojson alarm_json(const Alarm& a) {
  ojson j;
  j["type"] = "alarm";
  j["time"] = a.timestamp;
  j["origin"] = to_string(a.origin);
  j["source"] = a.source;
  j["behavior"] = a.behavior ? ojson(a.behavior->name) : ojson(nullptr);
  j["family"] = a.behavior ? ojson(to_string(a.behavior->family)) : ojson(nullptr);
  j["confidence"] = a.confidence ? ojson(*a.confidence) : ojson(nullptr);
  j["mtds"] = a.mtds;
  return j;
}

ojson outcome_json(const MtdOutcome& o) {
  ojson j;
  j["type"] = "outcome";
  j["mechanism"] = o.mechanism;
  j["deployment"] = o.deployment;
  j["start"] = o.start;
  j["end"] = o.end;
  j["status"] = to_string(o.status);
  j["trigger"] = o.trigger;
  j["metrics"] = ojson::object();
  for (const auto& [k, v] : o.metrics) j["metrics"][k] = v;
  j["detail"] = o.detail;
  return j;
}

}  // namespace

std::string alarm_to_json_line(const Alarm& alarm) { return alarm_json(alarm).dump(); }
std::string outcome_to_json_line(const MtdOutcome& outcome) { return outcome_json(outcome).dump(); }

std::string event_to_json_line(const JournalEvent& e) {
  ojson j;
  j["type"] = "event";
  j["time"] = e.time;
  j["kind"] = e.kind;
  j["detail"] = e.detail;
  return j.dump();
}

Journal::Journal(const std::filesystem::path& path) : file_(path, std::ios::binary | std::ios::trunc) {
  if (!file_) throw ConfigError("cannot open journal '" + path.string() + "'");
}

void Journal::append(std::string line) {
  std::lock_guard lock(mu_);
  if (file_.is_open()) file_ << line << '\n';
  lines_.push_back(std::move(line));
}

void Journal::record_alarm(const Alarm& alarm) { append(alarm_to_json_line(alarm)); }
void Journal::record_outcome(const MtdOutcome& outcome) { append(outcome_to_json_line(outcome)); }
void Journal::record_event(double time, const std::string& kind, const std::string& detail) {
  append(event_to_json_line({time, kind, detail}));
}

std::vector<std::string> Journal::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

std::string Journal::text() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& l : lines_) out += l + "\n";
  return out;
}

void Journal::flush() {
  std::lock_guard lock(mu_);
  if (file_.is_open()) file_.flush();
}

JournalContents parse_journal(std::string_view text) {
  JournalContents out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "alarm") {
        Alarm a;
        a.timestamp = j.at("time").get<double>();
        a.origin = j.at("origin") == "reactive" ? AlarmOrigin::Reactive : AlarmOrigin::Proactive;
        a.source = j.value("source", "");
        if (!j.at("behavior").is_null()) a.behavior = BehaviorLabel::from_name(j.at("behavior").get<std::string>());
        if (!j.at("confidence").is_null()) a.confidence = j.at("confidence").get<double>();
        a.mtds = j.value("mtds", std::vector<std::string>{});
        out.alarms.push_back(std::move(a));
      } else if (type == "outcome") {
        MtdOutcome o;
        o.mechanism = j.at("mechanism").get<std::string>();
        o.deployment = j.value("deployment", std::uint64_t{0});
        o.start = j.at("start").get<double>();
        o.end = j.at("end").get<double>();
        auto status = parse_outcome_status(j.at("status").get<std::string>());
        if (!status) throw FormatError("unknown outcome status", line_no);
        o.status = *status;
        o.trigger = j.value("trigger", "");
        o.detail = j.value("detail", "");
        for (const auto& [k, v] : j.at("metrics").items()) o.metrics[k] = v.get<double>();
        out.outcomes.push_back(std::move(o));
      } else if (type == "event") {
        out.events.push_back({j.at("time").get<double>(), j.at("kind").get<std::string>(), j.value("detail", "")});
      } else {
        throw FormatError("unknown journal record type '" + type + "'", line_no);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed journal line: ") + e.what(), line_no);
    }
  }
  return out;
}

JournalContents load_journal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open journal '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_journal(ss.str());
}

}  // namespace mtd
