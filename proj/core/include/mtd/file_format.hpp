#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtd/enforcement.hpp"
#include "mtd/environment.hpp"

namespace mtd {

inline constexpr int kExtensionMapVersion = 1;

/// Extensions treated as "genuine"; pseudo extensions never take these values.
const std::vector<std::string>& default_genuine_extensions();

struct ShuffleOptions {
  std::size_t pseudo_length = 8;
  std::vector<std::string> genuine_universe = default_genuine_extensions();
  /// Sidecar map file; must lie outside the shuffled root.
  std::string map_path = "/var/lib/mtd/extension_map.jsonl";
};

struct ExtensionMapEntry {
  /// Original path, including the genuine extension.
  std::string path;
  std::string genuine_ext;
  std::string pseudo_ext;

  /// Where the file lives while shuffled.
  std::string shuffled_path() const;
  bool operator==(const ExtensionMapEntry&) const = default;
};

struct ExtensionMap {
  std::string root;
  std::string map_path;
  std::vector<ExtensionMapEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }

  /// Header line {"version","root"} followed by one entry per line.
  std::string to_jsonl() const;
  /// Throws FormatError (line number) on malformed input or a version mismatch.
  static ExtensionMap from_jsonl(std::string_view text);
};

struct RestoreReport {
  std::size_t restored = 0;
  std::vector<std::string> missing;
  /// Original path was reoccupied meanwhile; the file keeps its pseudo name.
  std::vector<std::string> conflicts;
};

/// Renames every file under `root` whose extension (case-insensitive) is in
/// `target_exts` to a fresh per-file pseudo extension. The map is written
/// before the first rename; if that fails, PersistenceError is thrown and
/// nothing is renamed. Throws PathError when `root` is missing and ConfigError
/// for empty targets or a map path inside `root`.
ExtensionMap shuffle_extensions(Host& host, const std::string& root, const std::vector<std::string>& target_exts,
                                std::uint64_t seed, const ShuffleOptions& options = {});

/// Puts genuine extensions back, clears `map` and deletes its sidecar file.
RestoreReport restore_extensions(Host& host, ExtensionMap& map);

/// Reads a persisted map (e.g. after a crash). nullopt when absent.
std::optional<ExtensionMap> load_extension_map(const Host& host, const std::string& map_path);

struct FileFormatConfig {
  std::string root = "/data";
  std::vector<std::string> target_exts{".pdf"};
  ShuffleOptions options;
  /// Extensions stay shuffled this long before being restored.
  double hold_s = 56.0;

  void validate() const;
};

/// Enforcement adapter: shuffle on start, restore after hold_s.
class FileFormatMechanism final : public Mechanism {
 public:
  FileFormatMechanism(Host& host, FileFormatConfig config, std::uint64_t seed);
  MechanismId id() const override { return MechanismId::FileFormat; }
  void start(const Alarm& trigger, double now) override;
  std::optional<MtdOutcome> poll(double now) override;
  MtdOutcome stop(double now) override;
  bool running() const override { return running_; }

  const ExtensionMap& current_map() const { return map_; }
  const std::optional<RestoreReport>& last_restore() const { return last_restore_; }

 private:
  MtdOutcome finish(double now);

  Host& host_;
  FileFormatConfig config_;
  std::uint64_t seed_;
  std::uint64_t runs_ = 0;
  bool running_ = false;
  bool reactive_ = false;
  double started_ = 0.0;
  std::string trigger_;
  ExtensionMap map_;
  std::size_t renamed_ = 0;
  std::uint64_t bytes_hidden_ = 0;
  std::string failure_;
  std::optional<RestoreReport> last_restore_;
};

}  // namespace mtd
