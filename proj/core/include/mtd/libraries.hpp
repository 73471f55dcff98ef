#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mtd/enforcement.hpp"
#include "mtd/environment.hpp"

namespace mtd {

/// Known-good loader configuration: the preload file content and the preload
/// path embedded in the dynamic linker at a fixed offset.
struct LinkerBaseline {
  std::string preload_path;
  std::string preload_content;
  std::string linker_path;
  std::string linker_ref;
  std::uint64_t linker_ref_offset = 0;
  std::string preload_digest;
  std::string linker_ref_digest;
  /// SHA-256 over every field above; empty while unsealed.
  std::string seal;

  std::string compute_seal() const;
  bool sealed() const { return !seal.empty() && seal == compute_seal(); }

  std::string to_json() const;
  /// Throws FormatError on malformed input.
  static LinkerBaseline from_json(std::string_view text);
};

struct LoaderPaths {
  std::string preload_path = "/etc/ld.so.preload";
  std::string linker_path = "/lib/arm-linux-gnueabihf/ld-2.24.so";
  std::uint64_t linker_ref_offset = 1024;
};

/// Reads the current (assumed clean) loader state and seals it. Throws
/// IntegrityError when either file is missing or the offset is out of range.
LinkerBaseline capture_baseline(const Host& host, const LoaderPaths& paths);

/// The NUL-terminated string at `offset` in the linker file, or nullopt.
std::optional<std::string> read_linker_reference(const Host& host, const std::string& linker_path,
                                                 std::uint64_t offset);

struct SanitizeReport {
  bool changed = false;
  std::string target;
};

/// Rewrites the preload file to the baseline content (recreating it when
/// deleted). Throws IntegrityError for an unsealed baseline; PermissionError
/// propagates from the host.
SanitizeReport sanitize_preload(Host& host, const LinkerBaseline& baseline);
/// Rewrites the linker's embedded reference. Throws IntegrityError for an
/// unsealed baseline or a missing/short linker file.
SanitizeReport restore_linker_reference(Host& host, const LinkerBaseline& baseline);

struct LibrariesConfig {
  LoaderPaths paths;
  /// Virtual duration of one sanitation pass.
  double duration_s = 1.0;
};

/// Enforcement adapter: one pass of both sanitizers per run.
class LibrariesMechanism final : public Mechanism {
 public:
  LibrariesMechanism(Host& host, LinkerBaseline baseline, LibrariesConfig config = {});
  MechanismId id() const override { return MechanismId::Libraries; }
  void start(const Alarm& trigger, double now) override;
  std::optional<MtdOutcome> poll(double now) override;
  MtdOutcome stop(double now) override;
  bool running() const override { return running_; }

  const LinkerBaseline& baseline() const { return baseline_; }
  std::size_t passes() const { return passes_; }

 private:
  MtdOutcome finish(double now);

  Host& host_;
  LinkerBaseline baseline_;
  LibrariesConfig config_;
  bool running_ = false;
  double started_ = 0.0;
  std::string trigger_;
  SanitizeReport preload_;
  SanitizeReport linker_;
  std::string failure_;
  std::size_t passes_ = 0;
};

}  // namespace mtd
