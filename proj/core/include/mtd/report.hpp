#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtd/decision.hpp"
#include "mtd/enforcement.hpp"
#include "mtd/journal.hpp"

namespace mtd {

inline constexpr int kReportVersion = 1;

/// One Table IV-shaped row: an attack phase and the defense that met it.
struct PhaseRow {
  std::string phase;
  double duration_s = 0.0;
  std::uint64_t files_affected = 0;
  std::uint64_t bytes_affected = 0;
  /// Mechanism id, or "none".
  std::string mtd = "none";
  std::string mtd_status = "none";
  double mtd_duration_s = 0.0;
};

struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  std::vector<PhaseRow> phases;
  std::vector<Alarm> alarms;
  std::vector<MtdOutcome> outcomes;
  std::map<std::string, double> metrics;
  std::map<std::string, bool> checks;

  bool all_checks_pass() const;
  double metric(const std::string& name, double fallback = 0.0) const;
  bool check(const std::string& name) const;
};

/// Pretty-printed JSON; contains no wall-clock values, so equal inputs give
/// byte-identical output.
std::string report_to_json(const ScenarioReport& report);
/// Aligned text table derived from the same data as the JSON.
std::string report_to_table(const ScenarioReport& report);

/// Summaries of a journal file for `mtdctl report`.
std::string journal_to_json(const JournalContents& journal);
std::string journal_to_table(const JournalContents& journal);

}  // namespace mtd
