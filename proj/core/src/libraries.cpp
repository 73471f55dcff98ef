#include "mtd/libraries.hpp"

#include <algorithm>

#include <json.hpp>

#include "mtd/digest.hpp"
#include "mtd/error.hpp"
#include "mtd/log.hpp"

namespace mtd {
namespace {

const std::string kActor = "mtd:libraries";

void require_sealed(const LinkerBaseline& b) {
  if (!b.sealed()) throw IntegrityError("linker baseline is not sealed; refusing to sanitize");
}

}  // namespace

std::string LinkerBaseline::compute_seal() const {
  Sha256 h;
  h.field(preload_path).field(preload_content).field(linker_path).field(linker_ref);
  h.field(std::to_string(linker_ref_offset)).field(preload_digest).field(linker_ref_digest);
  return h.hex_digest();
}

std::string LinkerBaseline::to_json() const {
  nlohmann::ordered_json j;
  j["preload_path"] = preload_path;
  j["preload_content"] = preload_content;
  j["linker_path"] = linker_path;
  j["linker_ref"] = linker_ref;
  j["linker_ref_offset"] = linker_ref_offset;
  j["digests"] = {{"preload", preload_digest}, {"linker_ref", linker_ref_digest}};
  j["seal"] = seal;
  return j.dump(2);
}

LinkerBaseline LinkerBaseline::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    LinkerBaseline b;
    b.preload_path = j.at("preload_path").get<std::string>();
    b.preload_content = j.at("preload_content").get<std::string>();
    b.linker_path = j.at("linker_path").get<std::string>();
    b.linker_ref = j.at("linker_ref").get<std::string>();
    b.linker_ref_offset = j.at("linker_ref_offset").get<std::uint64_t>();
    b.preload_digest = j.at("digests").at("preload").get<std::string>();
    b.linker_ref_digest = j.at("digests").at("linker_ref").get<std::string>();
    b.seal = j.value("seal", "");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed linker baseline: ") + e.what(), 0);
  }
}

std::optional<std::string> read_linker_reference(const Host& host, const std::string& linker_path,
                                                 std::uint64_t offset) {
  auto image = host.read_file(linker_path);
  if (!image || offset >= image->size()) return std::nullopt;
  auto end = image->find('\0', offset);
  if (end == std::string::npos) return std::nullopt;
  return image->substr(offset, end - offset);
}

LinkerBaseline capture_baseline(const Host& host, const LoaderPaths& paths) {
  auto preload = host.read_file(paths.preload_path);
  if (!preload) throw IntegrityError("preload file missing: " + paths.preload_path);
  auto ref = read_linker_reference(host, paths.linker_path, paths.linker_ref_offset);
  if (!ref) throw IntegrityError("linker reference unreadable in " + paths.linker_path);
  LinkerBaseline b;
  b.preload_path = paths.preload_path;
  b.preload_content = *preload;
  b.linker_path = paths.linker_path;
  b.linker_ref = *ref;
  b.linker_ref_offset = paths.linker_ref_offset;
  b.preload_digest = sha256_hex(*preload);
  b.linker_ref_digest = sha256_hex(*ref);
  b.seal = b.compute_seal();
  return b;
}

SanitizeReport sanitize_preload(Host& host, const LinkerBaseline& baseline) {
  require_sealed(baseline);
  SanitizeReport r{false, baseline.preload_path};
  auto current = host.read_file(baseline.preload_path);
  if (current && *current == baseline.preload_content) return r;
  HostActorScope actor(host, kActor);
  if (!current) host.make_directory(parent_path(baseline.preload_path));
  host.write_file(baseline.preload_path, baseline.preload_content);
  r.changed = true;
  return r;
}

SanitizeReport restore_linker_reference(Host& host, const LinkerBaseline& baseline) {
  require_sealed(baseline);
  SanitizeReport r{false, baseline.linker_path};
  auto image = host.read_file(baseline.linker_path);
  if (!image) throw IntegrityError("linker file missing: " + baseline.linker_path);
  const auto len = baseline.linker_ref.size() + 1;
  if (baseline.linker_ref_offset + len > image->size())
    throw IntegrityError("linker file too short for reference at offset " + std::to_string(baseline.linker_ref_offset));
  const auto want = baseline.linker_ref + '\0';
  if (image->compare(baseline.linker_ref_offset, len, want) == 0) return r;
  image->replace(baseline.linker_ref_offset, len, want);
  HostActorScope actor(host, kActor);
  host.write_file(baseline.linker_path, *image);
  r.changed = true;
  return r;
}

LibrariesMechanism::LibrariesMechanism(Host& host, LinkerBaseline baseline, LibrariesConfig config)
    : host_(host), baseline_(std::move(baseline)), config_(std::move(config)) {
  require_sealed(baseline_);
  if (!(config_.duration_s >= 0.0)) throw ConfigError("libraries duration_s must be non-negative");
}

void LibrariesMechanism::start(const Alarm& trigger, double now) {
  running_ = true;
  started_ = now;
  trigger_ = trigger.behavior ? "reactive:" + trigger.behavior->name : "proactive:" + trigger.source;
  failure_.clear();
  preload_ = {};
  linker_ = {};
  ++passes_;
  try {
    preload_ = sanitize_preload(host_, baseline_);
    linker_ = restore_linker_reference(host_, baseline_);
  } catch (const Error& e) {
    failure_ = e.what();
    log_error("libraries sanitation failed: " + failure_);
  }
  if (preload_.changed || linker_.changed) log_info("loader configuration restored from baseline");
}

std::optional<MtdOutcome> LibrariesMechanism::poll(double now) {
  if (!running_ || now < started_ + config_.duration_s) return std::nullopt;
  return finish(now);
}

MtdOutcome LibrariesMechanism::stop(double now) {
  if (!running_) throw ConfigError("libraries mechanism is not running");
  return finish(now);
}

MtdOutcome LibrariesMechanism::finish(double now) {
  running_ = false;
  MtdOutcome o;
  o.mechanism = std::string(to_string(id()));
  o.start = started_;
  o.end = std::max(started_, now);
  o.trigger = trigger_;
  o.metrics = {{"preload_restored", preload_.changed ? 1.0 : 0.0}, {"linker_restored", linker_.changed ? 1.0 : 0.0}};
  if (!failure_.empty()) {
    o.status = OutcomeStatus::Failed;
    o.detail = failure_;
  } else if (preload_.changed || linker_.changed) {
    o.status = OutcomeStatus::Mitigated;
    o.detail = "loader configuration restored";
  } else {
    o.status = OutcomeStatus::NoOp;
    o.detail = "loader configuration clean";
  }
  return o;
}

}  // namespace mtd
