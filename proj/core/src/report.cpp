#include "mtd/report.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace mtd {

using ojson = nlohmann::ordered_json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

ojson alarm_json(const Alarm& a) {
  ojson j;
  j["time"] = a.timestamp;
  j["origin"] = to_string(a.origin);
  j["source"] = a.source;
  j["behavior"] = a.behavior ? ojson(a.behavior->name) : ojson(nullptr);
  j["confidence"] = a.confidence ? ojson(*a.confidence) : ojson(nullptr);
  j["mtds"] = a.mtds;
  return j;
}

ojson outcome_json(const MtdOutcome& o) {
  ojson j;
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

// Column-aligned rendering of string cells.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return {};
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::string out;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    std::string line;
    for (std::size_t i = 0; i < rows[n].size(); ++i) {
      if (i) line += "  ";
      line += rows[n][i] + std::string(width[i] - rows[n][i].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (n == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

std::vector<std::vector<std::string>> outcome_rows(const std::vector<MtdOutcome>& outcomes) {
  std::vector<std::vector<std::string>> rows{{"mechanism", "deployment", "start", "end", "status", "trigger"}};
  for (const auto& o : outcomes)
    rows.push_back({o.mechanism, std::to_string(o.deployment), fmt("%.1f", o.start), fmt("%.1f", o.end),
                    std::string(to_string(o.status)), o.trigger});
  return rows;
}

std::vector<std::vector<std::string>> alarm_rows(const std::vector<Alarm>& alarms) {
  std::vector<std::vector<std::string>> rows{{"time", "origin", "source", "behavior", "confidence"}};
  for (const auto& a : alarms)
    rows.push_back({fmt("%.1f", a.timestamp), std::string(to_string(a.origin)), a.source,
                    a.behavior ? a.behavior->name : "-", a.confidence ? fmt("%.2f", *a.confidence) : "-"});
  return rows;
}

}  // namespace

bool ScenarioReport::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

double ScenarioReport::metric(const std::string& name, double fallback) const {
  auto it = metrics.find(name);
  return it == metrics.end() ? fallback : it->second;
}

bool ScenarioReport::check(const std::string& name) const {
  auto it = checks.find(name);
  return it != checks.end() && it->second;
}

std::string report_to_json(const ScenarioReport& r) {
  ojson j;
  j["format"] = "mtd-report";
  j["version"] = kReportVersion;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["duration_s"] = r.duration_s;
  j["phases"] = ojson::array();
  for (const auto& p : r.phases) {
    ojson row;
    row["phase"] = p.phase;
    row["duration_s"] = p.duration_s;
    row["files_affected"] = p.files_affected;
    row["bytes_affected"] = p.bytes_affected;
    row["mtd"] = p.mtd;
    row["mtd_status"] = p.mtd_status;
    row["mtd_duration_s"] = p.mtd_duration_s;
    j["phases"].push_back(row);
  }
  j["alarms"] = ojson::array();
  for (const auto& a : r.alarms) j["alarms"].push_back(alarm_json(a));
  j["outcomes"] = ojson::array();
  for (const auto& o : r.outcomes) j["outcomes"].push_back(outcome_json(o));
  j["metrics"] = ojson::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  j["checks"] = ojson::object();
  for (const auto& [k, v] : r.checks) j["checks"][k] = v;
  return j.dump(2) + "\n";
}

std::string report_to_table(const ScenarioReport& r) {
  std::string out = "scenario " + r.scenario + "  seed " + std::to_string(r.seed) + "  duration " +
                    fmt("%.0f", r.duration_s) + " s\n\n";
  std::vector<std::vector<std::string>> rows{
      {"phase", "duration_s", "files", "bytes", "mtd", "status", "mtd_duration_s"}};
  for (const auto& p : r.phases)
    rows.push_back({p.phase, fmt("%.1f", p.duration_s), std::to_string(p.files_affected),
                    std::to_string(p.bytes_affected), p.mtd, p.mtd_status, fmt("%.1f", p.mtd_duration_s)});
  out += render(rows);
  if (!r.outcomes.empty()) out += "\n" + render(outcome_rows(r.outcomes));
  if (!r.metrics.empty()) {
    std::vector<std::vector<std::string>> m{{"metric", "value"}};
    for (const auto& [k, v] : r.metrics) m.push_back({k, fmt("%.6g", v)});
    out += "\n" + render(m);
  }
  if (!r.checks.empty()) {
    std::vector<std::vector<std::string>> c{{"check", "result"}};
    for (const auto& [k, v] : r.checks) c.push_back({k, v ? "pass" : "FAIL"});
    out += "\n" + render(c);
  }
  return out;
}

std::string journal_to_json(const JournalContents& journal) {
  ojson j;
  j["format"] = "mtd-journal-summary";
  j["version"] = kReportVersion;
  j["alarms"] = ojson::array();
  for (const auto& a : journal.alarms) j["alarms"].push_back(alarm_json(a));
  j["outcomes"] = ojson::array();
  for (const auto& o : journal.outcomes) j["outcomes"].push_back(outcome_json(o));
  j["events"] = ojson::array();
  for (const auto& e : journal.events) j["events"].push_back({{"time", e.time}, {"kind", e.kind}, {"detail", e.detail}});
  std::map<std::string, std::size_t> by_status;
  for (const auto& o : journal.outcomes) ++by_status[std::string(to_string(o.status))];
  j["summary"] = {{"alarms", journal.alarms.size()}, {"outcomes", journal.outcomes.size()}, {"by_status", by_status}};
  return j.dump(2) + "\n";
}

std::string journal_to_table(const JournalContents& journal) {
  std::string out;
  out += render(alarm_rows(journal.alarms));
  out += "\n" + render(outcome_rows(journal.outcomes));
  if (!journal.events.empty()) {
    std::vector<std::vector<std::string>> rows{{"time", "event", "detail"}};
    for (const auto& e : journal.events) rows.push_back({fmt("%.1f", e.time), e.kind, e.detail});
    out += "\n" + render(rows);
  }
  return out;
}

}  // namespace mtd
