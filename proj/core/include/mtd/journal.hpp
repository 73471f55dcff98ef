#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "mtd/decision.hpp"
#include "mtd/enforcement.hpp"

namespace mtd {

struct JournalEvent {
  double time = 0.0;
  std::string kind;
  std::string detail;
};

/// Parsed journal contents.
struct JournalContents {
  std::vector<Alarm> alarms;
  std::vector<MtdOutcome> outcomes;
  std::vector<JournalEvent> events;
};

/// Append-only JSON-lines log. Every line is an object whose "type" is
/// "alarm", "outcome" or "event". Thread-safe.
class Journal {
 public:
  Journal() = default;
  /// Also appends each line to `path` (created or truncated).
  explicit Journal(const std::filesystem::path& path);

  void record_alarm(const Alarm& alarm);
  void record_outcome(const MtdOutcome& outcome);
  void record_event(double time, const std::string& kind, const std::string& detail);

  std::vector<std::string> lines() const;
  std::string text() const;
  void flush();

 private:
  void append(std::string line);

  mutable std::mutex mu_;
  std::vector<std::string> lines_;
  std::ofstream file_;
};

std::string alarm_to_json_line(const Alarm& alarm);
std::string outcome_to_json_line(const MtdOutcome& outcome);
std::string event_to_json_line(const JournalEvent& event);

/// Throws FormatError (1-based line number) on malformed lines.
JournalContents parse_journal(std::string_view text);
JournalContents load_journal(const std::filesystem::path& path);

}  // namespace mtd
