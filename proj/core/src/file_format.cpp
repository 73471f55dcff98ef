#include "mtd/file_format.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <json.hpp>

#include "mtd/error.hpp"
#include "mtd/log.hpp"

namespace mtd {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<FileInfo> files_under(const Host& host, const std::string& root) {
  std::vector<FileInfo> out;
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    auto dir = std::move(stack.back());
    stack.pop_back();
    auto entries = host.list_dir(dir);
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      auto path = join_path(dir, it->name);
      if (it->directory) stack.push_back(std::move(path));
    }
    for (const auto& e : entries)
      if (!e.directory)
        if (auto info = host.stat(join_path(dir, e.name))) out.push_back(std::move(*info));
  }
  return out;
}

const std::string kActor = "mtd:file_format";

}  // namespace

const std::vector<std::string>& default_genuine_extensions() {
  static const std::vector<std::string> exts{
      ".7z",  ".avi", ".bak", ".bin", ".bmp", ".c",    ".cfg", ".conf", ".cpp", ".csv", ".dat", ".db",
      ".doc", ".docx", ".gif", ".gz", ".h",   ".htm",  ".html", ".ini", ".jpeg", ".jpg", ".js", ".json",
      ".key", ".log", ".md",  ".mkv", ".mov", ".mp3",  ".mp4", ".odt", ".pdf", ".pem", ".php", ".png",
      ".ppt", ".pptx", ".py", ".rar", ".rtf", ".sh",   ".so",  ".sql", ".svg", ".tar", ".tgz", ".tif",
      ".tiff", ".tmp", ".txt", ".wav", ".xls", ".xlsx", ".xml", ".yaml", ".yml", ".zip"};
  return exts;
}

std::string ExtensionMapEntry::shuffled_path() const {
  return path.substr(0, path.size() - genuine_ext.size()) + pseudo_ext;
}

std::string ExtensionMap::to_jsonl() const {
  nlohmann::ordered_json head;
  head["version"] = kExtensionMapVersion;
  head["root"] = root;
  std::string out = head.dump() + "\n";
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["path"] = e.path;
    j["genuine_ext"] = e.genuine_ext;
    j["pseudo_ext"] = e.pseudo_ext;
    out += j.dump() + "\n";
  }
  return out;
}

ExtensionMap ExtensionMap::from_jsonl(std::string_view text) {
  ExtensionMap map;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!header) {
        const int version = j.at("version").get<int>();
        if (version != kExtensionMapVersion)
          throw FormatError("extension map version mismatch: expected " + std::to_string(kExtensionMapVersion) +
                                ", found " + std::to_string(version),
                            line_no);
        map.root = j.at("root").get<std::string>();
        header = true;
        continue;
      }
      ExtensionMapEntry e{j.at("path").get<std::string>(), j.at("genuine_ext").get<std::string>(),
                          j.at("pseudo_ext").get<std::string>()};
      if (!e.path.ends_with(e.genuine_ext)) throw FormatError("entry path does not end with its genuine extension", line_no);
      map.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("malformed extension map line: ") + ex.what(), line_no);
    }
  }
  if (!header) throw FormatError("extension map has no header", line_no);
  return map;
}

ExtensionMap shuffle_extensions(Host& host, const std::string& root, const std::vector<std::string>& target_exts,
                                std::uint64_t seed, const ShuffleOptions& options) {
  if (target_exts.empty()) throw ConfigError("file format shuffle needs at least one target extension");
  if (options.pseudo_length == 0) throw ConfigError("pseudo extension length must be positive");
  if (is_within(options.map_path, root)) throw ConfigError("extension map must be stored outside " + root);
  auto root_info = host.stat(root);
  if (!root_info || !root_info->directory) throw PathError("shuffle root does not exist: " + root);

  std::set<std::string> targets;
  for (const auto& t : target_exts) targets.insert(lower(t));

  const auto files = files_under(host, root);
  std::set<std::string> reserved;
  for (const auto& g : options.genuine_universe) reserved.insert(lower(g));
  for (const auto& t : targets) reserved.insert(t);
  for (const auto& f : files) reserved.insert(lower(extension_of(f.path)));

  ExtensionMap map;
  map.root = root;
  map.map_path = options.map_path;
  Rng rng(seed);
  static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  for (const auto& f : files) {
    const auto ext = extension_of(f.path);
    if (ext.empty() || !targets.count(lower(ext))) continue;
    ExtensionMapEntry e{f.path, ext, {}};
    do {
      e.pseudo_ext = ".";
      for (std::size_t i = 0; i < options.pseudo_length; ++i) e.pseudo_ext.push_back(alphabet[rng.below(alphabet.size())]);
    } while (reserved.count(e.pseudo_ext) || host.exists(e.shuffled_path()));
    reserved.insert(e.pseudo_ext);
    map.entries.push_back(std::move(e));
  }
  if (map.empty()) return map;

  HostActorScope actor(host, kActor);
  try {
    host.make_directory(parent_path(options.map_path));
    host.write_file(options.map_path, map.to_jsonl());
  } catch (const Error& ex) {
    throw PersistenceError(std::string("cannot persist extension map: ") + ex.what());
  }
  for (const auto& e : map.entries) host.rename(e.path, e.shuffled_path());
  log_info("shuffled " + std::to_string(map.size()) + " file extensions under " + root);
  return map;
}

RestoreReport restore_extensions(Host& host, ExtensionMap& map) {
  RestoreReport report;
  HostActorScope actor(host, kActor);
  for (const auto& e : map.entries) {
    const auto from = e.shuffled_path();
    if (!host.exists(from)) {
      report.missing.push_back(e.path);
    } else if (host.exists(e.path)) {
      report.conflicts.push_back(e.path);
    } else {
      host.rename(from, e.path);
      ++report.restored;
    }
  }
  if (!map.map_path.empty() && host.exists(map.map_path)) host.remove(map.map_path);
  map.entries.clear();
  return report;
}

std::optional<ExtensionMap> load_extension_map(const Host& host, const std::string& map_path) {
  auto text = host.read_file(map_path);
  if (!text) return std::nullopt;
  auto map = ExtensionMap::from_jsonl(*text);
  map.map_path = map_path;
  return map;
}

void FileFormatConfig::validate() const {
  if (root.empty() || root.front() != '/') throw ConfigError("file_format root must be an absolute path");
  if (target_exts.empty()) throw ConfigError("file_format target_exts must not be empty");
  for (const auto& t : target_exts)
    if (t.size() < 2 || t.front() != '.') throw ConfigError("file_format target extension '" + t + "' must start with '.'");
  if (options.pseudo_length == 0) throw ConfigError("file_format pseudo_length must be positive");
  if (is_within(options.map_path, root)) throw ConfigError("file_format map_path must lie outside root");
  if (!(hold_s >= 0.0)) throw ConfigError("file_format hold_s must be non-negative");
}

FileFormatMechanism::FileFormatMechanism(Host& host, FileFormatConfig config, std::uint64_t seed)
    : host_(host), config_(std::move(config)), seed_(seed) {
  config_.validate();
}

void FileFormatMechanism::start(const Alarm& trigger, double now) {
  running_ = true;
  started_ = now;
  reactive_ = trigger.origin == AlarmOrigin::Reactive;
  trigger_ = trigger.behavior ? "reactive:" + trigger.behavior->name : "proactive:" + trigger.source;
  renamed_ = 0;
  bytes_hidden_ = 0;
  failure_.clear();
  try {
    map_ = shuffle_extensions(host_, config_.root, config_.target_exts, mix_seed(seed_, runs_++), config_.options);
    renamed_ = map_.size();
    for (const auto& e : map_.entries)
      if (auto info = host_.stat(e.shuffled_path())) bytes_hidden_ += info->size;
  } catch (const Error& ex) {
    failure_ = ex.what();
    log_error("file format shuffle failed: " + failure_);
  }
}

std::optional<MtdOutcome> FileFormatMechanism::poll(double now) {
  if (!running_) return std::nullopt;
  if (failure_.empty() && now < started_ + config_.hold_s) return std::nullopt;
  return finish(now);
}

MtdOutcome FileFormatMechanism::stop(double now) {
  if (!running_) throw ConfigError("file format mechanism is not running");
  return finish(now);
}

MtdOutcome FileFormatMechanism::finish(double now) {
  auto report = restore_extensions(host_, map_);
  last_restore_ = report;
  running_ = false;
  MtdOutcome o;
  o.mechanism = std::string(to_string(id()));
  o.start = started_;
  o.end = std::max(started_, now);
  o.trigger = trigger_;
  o.metrics = {{"files_renamed", static_cast<double>(renamed_)},
               {"bytes_protected", static_cast<double>(bytes_hidden_)},
               {"files_restored", static_cast<double>(report.restored)},
               {"files_missing", static_cast<double>(report.missing.size())}};
  if (!failure_.empty()) {
    o.status = OutcomeStatus::Failed;
    o.detail = failure_;
  } else if (reactive_ && renamed_ > 0) {
    o.status = OutcomeStatus::Mitigated;
    o.detail = "extensions shuffled and restored";
  } else {
    o.status = OutcomeStatus::NoOp;
    o.detail = renamed_ > 0 ? "proactive shuffle" : "no matching files";
  }
  return o;
}

}  // namespace mtd
