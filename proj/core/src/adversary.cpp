#include "mtd/adversary.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "mtd/error.hpp"

namespace mtd {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool matches(const std::string& name, const std::vector<std::string>& exts) {
  const auto ext = lower(extension_of(name));
  if (ext.empty()) return false;
  return std::any_of(exts.begin(), exts.end(), [&](const auto& e) { return lower(e) == ext; });
}

bool overlaps(std::optional<double> start, std::optional<double> end, double from, double to) {
  if (!start || *start >= to) return false;
  return !end || *end > from;
}

}  // namespace

// --- encryptor -----------------------------------------------------------------

Encryptor::Encryptor(EncryptorParams params) : params_(std::move(params)) {
  if (!(params_.rate_files_per_s > 0.0)) throw ConfigError("encryptor rate_files_per_s must be positive");
  if (!(params_.max_runtime_s > 0.0)) throw ConfigError("encryptor max_runtime_s must be positive");
  if (params_.target_exts.empty()) throw ConfigError("encryptor needs target extensions");
}

std::optional<double> Encryptor::next_event() const {
  if (done_) return std::nullopt;
  return params_.start_at + static_cast<double>(ticks_) / params_.rate_files_per_s;
}

void Encryptor::enter(const SandboxEnvironment& env, const std::string& dir) {
  auto info = env.stat(dir);
  if (!info || !info->directory) return;
  Frame f;
  f.dir = dir;
  for (const auto& e : env.list_dir(dir)) {
    if (e.directory)
      f.subdirs.push_back(e.name);
    else if (matches(e.name, params_.target_exts))
      f.files.push_back(e.name);
  }
  stack_.push_back(std::move(f));
}

std::optional<std::string> Encryptor::next_file(const SandboxEnvironment& env) {
  while (!stack_.empty()) {
    auto& top = stack_.back();
    if (top.next_file < top.files.size()) {
      auto path = join_path(top.dir, top.files[top.next_file++]);
      if (env.exists(path)) return path;
      continue;
    }
    if (top.next_subdir < top.subdirs.size()) {
      auto path = join_path(top.dir, top.subdirs[top.next_subdir++]);
      enter(env, path);
      continue;
    }
    stack_.pop_back();
  }
  return std::nullopt;
}

void Encryptor::finish(SandboxEnvironment& env, double t) {
  done_ = true;
  stats_.stopped = t;
  if (stats_.pid && env.is_alive(stats_.pid)) env.exit_process(stats_.pid);
}

void Encryptor::fire(SandboxEnvironment& env) {
  if (done_) return;
  ActorScope actor(env, "adversary:encryptor");
  const double t = env.now();
  if (!stats_.started) {
    stats_.started = t;
    stats_.pid = env.spawn_process(params_.process_name, params_.cpu_percent);
    enter(env, params_.root);
  }
  ++ticks_;
  if (!env.is_alive(stats_.pid)) {
    stats_.killed = true;
    done_ = true;
    stats_.stopped = t;
    return;
  }
  if (t >= params_.start_at + params_.max_runtime_s) return finish(env, t);
  while (auto path = next_file(env)) {
    const auto size = env.stat(*path)->size;
    env.note_file_open(stats_.pid, *path);
    if (env.encrypt_file(*path)) {
      ++stats_.files_encrypted;
      stats_.bytes_encrypted += size;
      stats_.encrypted_paths.push_back(*path);
      return;
    }
  }
  finish(env, t);
}

bool Encryptor::active_during(double from, double to) const {
  return overlaps(stats_.started, stats_.stopped, from, to);
}

std::map<std::string, double> Encryptor::stats() const {
  double runtime = 0.0;
  if (stats_.started && stats_.stopped) runtime = *stats_.stopped - *stats_.started;
  return {{"files_encrypted", static_cast<double>(stats_.files_encrypted)},
          {"bytes_encrypted", static_cast<double>(stats_.bytes_encrypted)},
          {"runtime_s", runtime},
          {"killed", stats_.killed ? 1.0 : 0.0}};
}

// --- exfiltrator ---------------------------------------------------------------

Exfiltrator::Exfiltrator(ExfiltratorParams params) : params_(std::move(params)) {
  if (!(params_.rate_bytes_per_s > 0.0)) throw ConfigError("exfiltrator rate_bytes_per_s must be positive");
  if (!(params_.step_s > 0.0)) throw ConfigError("exfiltrator step_s must be positive");
  if (!(params_.duration_s > 0.0)) throw ConfigError("exfiltrator duration_s must be positive");
  if (params_.target_exts.empty()) throw ConfigError("exfiltrator needs target extensions");
}

std::optional<double> Exfiltrator::next_event() const {
  if (done_) return std::nullopt;
  return params_.start_at + static_cast<double>(steps_) * params_.step_s;
}

void Exfiltrator::enter(const SandboxEnvironment& env, const std::string& dir) {
  auto info = env.stat(dir);
  if (!info || !info->directory) return;
  Frame f;
  f.dir = dir;
  for (const auto& e : env.list_dir(dir)) {
    if (e.directory)
      f.subdirs.push_back(e.name);
    else if (matches(e.name, params_.target_exts))
      f.files.push_back(e.name);
  }
  stack_.push_back(std::move(f));
}

bool Exfiltrator::open_next(const SandboxEnvironment& env) {
  while (!stack_.empty()) {
    auto& top = stack_.back();
    if (top.next_file < top.files.size()) {
      auto path = join_path(top.dir, top.files[top.next_file++]);
      auto info = env.stat(path);
      if (!info || !matches(path, params_.target_exts)) continue;
      remaining_in_file_ = info->size;
      file_open_ = true;
      ++stats_.files_touched;
      return true;
    }
    if (top.next_subdir < top.subdirs.size()) {
      auto path = join_path(top.dir, top.subdirs[top.next_subdir++]);
      enter(env, path);
      continue;
    }
    stack_.pop_back();
  }
  return false;
}

void Exfiltrator::fire(SandboxEnvironment& env) {
  if (done_) return;
  const double t = env.now();
  const auto total_steps = static_cast<std::uint64_t>(std::llround(params_.duration_s / params_.step_s));
  if (steps_ == 0) enter(env, params_.root);
  if (steps_ >= total_steps) {
    done_ = true;
    ended_ = t;
    return;
  }
  const auto quota = [&](std::uint64_t k) {
    return static_cast<std::uint64_t>(params_.rate_bytes_per_s * params_.step_s * static_cast<double>(k));
  };
  std::uint64_t budget = quota(steps_ + 1) - quota(steps_);
  ++steps_;
  while (budget > 0) {
    if (!file_open_ && !open_next(env)) {
      done_ = true;
      ended_ = t + params_.step_s;
      return;
    }
    const auto take = std::min(budget, remaining_in_file_);
    stats_.bytes_leaked += take;
    remaining_in_file_ -= take;
    budget -= take;
    if (remaining_in_file_ == 0) {
      file_open_ = false;
      ++stats_.files_completed;
    }
  }
}

bool Exfiltrator::active_during(double from, double to) const {
  std::optional<double> start;
  if (steps_ > 0) start = params_.start_at;
  return overlaps(start, ended_, from, to);
}

std::map<std::string, double> Exfiltrator::stats() const {
  return {{"bytes_leaked", static_cast<double>(stats_.bytes_leaked)},
          {"files_touched", static_cast<double>(stats_.files_touched)},
          {"files_completed", static_cast<double>(stats_.files_completed)}};
}

// --- rootkit -------------------------------------------------------------------

Rootkit::Rootkit(RootkitParams params) : params_(std::move(params)) {
  if (params_.hide_prefix.empty()) throw ConfigError("rootkit hide_prefix must not be empty");
}

std::optional<double> Rootkit::next_event() const {
  if (fired_) return std::nullopt;
  return params_.inject_at;
}

void Rootkit::fire(SandboxEnvironment& env) {
  fired_ = true;
  inject(env);
}

void Rootkit::inject(SandboxEnvironment& env) {
  const auto& lk = env.linker();
  if (!lk.enabled) throw ConfigError("rootkit emulation needs the linker model enabled");
  ActorScope actor(env, "adversary:rootkit");
  const double t = env.now();
  auto ensure = [&](const std::string& path, const std::string& content) {
    auto current = env.read_file(path);
    if (current && *current == content) return false;
    if (!current) env.make_directory(parent_path(path));
    env.write_file(path, content);
    return true;
  };
  const auto lib_line = params_.library_path + "\n";
  ensure(params_.library_path, "\x7f" "ELF rootkit payload");
  ensure(params_.rogue_preload_path, lib_line);
  ensure(params_.artifact_path, "captured credentials\n");
  if (ensure(lk.preload_path, lib_line)) stats_.preload_tampered_at = t;

  auto image = env.read_file(lk.linker_path);
  if (!image) throw IntegrityError("linker file missing: " + lk.linker_path);
  const auto want = params_.rogue_preload_path + '\0';
  if (lk.linker_ref_offset + want.size() > image->size()) throw ConfigError("rogue preload path does not fit the linker");
  if (image->compare(lk.linker_ref_offset, want.size(), want) != 0) {
    image->replace(lk.linker_ref_offset, want.size(), want);
    env.write_file(lk.linker_path, *image);
    stats_.linker_tampered_at = t;
  }
  env.register_hider(params_.library_path, params_.hide_prefix);
  ++stats_.injections;
}

bool Rootkit::active_during(double /*from*/, double to) const { return fired_ && params_.inject_at < to; }

std::map<std::string, double> Rootkit::stats() const {
  return {{"inject_at", params_.inject_at}, {"injections", static_cast<double>(stats_.injections)}};
}

bool preload_tampered(const SandboxEnvironment& env, const std::string& expected_content) {
  auto current = env.read_file(env.linker().preload_path);
  return !current || *current != expected_content;
}

bool linker_tampered(const SandboxEnvironment& env) { return env.linker_reference() != env.linker().preload_path; }

// --- botnet --------------------------------------------------------------------

Botnet::Botnet(BotnetParams params) : params_(std::move(params)) {
  if (!(params_.beacon_interval_s > 0.0)) throw ConfigError("botnet beacon_interval_s must be positive");
  if (!(params_.duration_s >= 0.0)) throw ConfigError("botnet duration_s must be non-negative");
  Ipv4Address::parse_or_throw(params_.c2_address, "botnet c2_address");
}

std::optional<double> Botnet::next_event() const {
  const double offset = static_cast<double>(k_) * params_.beacon_interval_s;
  if (offset >= params_.duration_s) return std::nullopt;
  return params_.start_at + offset;
}

void Botnet::fire(SandboxEnvironment& env) {
  if (!next_event()) return;
  ++k_;
  const auto ip = env.device_ip();
  if (!learned_) learned_ = ip;
  Beacon b{env.now(), ip, ip == *learned_};
  ++stats_.sent;
  if (b.delivered) ++stats_.delivered;
  stats_.log.push_back(b);
}

bool Botnet::active_during(double from, double to) const {
  if (k_ == 0) return false;
  return overlaps(params_.start_at, params_.start_at + params_.duration_s, from, to);
}

std::map<std::string, double> Botnet::stats() const {
  return {{"beacons_sent", static_cast<double>(stats_.sent)},
          {"beacons_delivered", static_cast<double>(stats_.delivered)}};
}

void run_adversaries(SandboxEnvironment& env, const std::vector<Adversary*>& adversaries, double until) {
  while (true) {
    Adversary* next = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (auto* a : adversaries) {
      auto t = a->next_event();
      if (t && *t < until && *t < best) {
        best = *t;
        next = a;
      }
    }
    if (!next) break;
    env.advance_to(std::max(best, env.now()));
    next->fire(env);
  }
  if (until > env.now() && std::isfinite(until)) env.advance_to(until);
}

}  // namespace mtd
