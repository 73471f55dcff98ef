#include "mtd/ransomware_trap.hpp"

#include <algorithm>

#include "mtd/error.hpp"
#include "mtd/log.hpp"

namespace mtd {
namespace {

constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";

std::string random_name(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(kAlnum[rng.below(kAlnum.size())]);
  return s;
}

template <class Visit>
void walk_files(const Host& host, const std::string& root, const std::set<std::string>& skip_dirs, Visit&& visit) {
  if (!host.exists(root)) return;
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    auto dir = std::move(stack.back());
    stack.pop_back();
    for (const auto& e : host.list_dir(dir)) {
      auto path = join_path(dir, e.name);
      if (e.directory) {
        if (!skip_dirs.count(path)) stack.push_back(std::move(path));
      } else if (auto info = host.stat(path)) {
        visit(*info);
      }
    }
  }
}

const std::string kActor = "mtd:file_encryption";

}  // namespace

void TrapConfig::validate() const {
  if (dummy_files_per_dir == 0) throw ConfigError("trap dummy_files_per_dir must be positive");
  if (dummy_file_size < kDecoyMagic.size()) throw ConfigError("trap dummy_file_size must hold the decoy marker");
  if (!(cpu_floor_percent > 0.0)) throw ConfigError("trap cpu_floor_percent must be positive");
  if (open_files_per_minute_threshold == 0) throw ConfigError("trap open_files_per_minute_threshold must be positive");
  if (!(poll_interval_s > 0.0)) throw ConfigError("trap poll_interval_s must be positive");
  if (!(observation_s > 0.0)) throw ConfigError("trap observation_s must be positive");
  if (!(max_runtime_s > 0.0)) throw ConfigError("trap max_runtime_s must be positive");
  if (protected_root.empty() || protected_root.front() != '/') throw ConfigError("trap protected_root must be absolute");
  if (decoy_dir_prefix.find('/') != std::string::npos) throw ConfigError("trap decoy_dir_prefix must not contain '/'");
}

std::vector<int> identify_encryptor(const std::vector<ProcessRecord>& processes, const TrapConfig& config) {
  std::vector<int> out;
  for (const auto& p : processes) {
    if (!p.alive || p.cpu_percent < config.cpu_floor_percent) continue;
    if (p.whitelisted || config.whitelist.count(p.name)) continue;
    if (p.files_opened_last_minute > config.open_files_per_minute_threshold) out.push_back(p.pid);
  }
  return out;
}

// --- RansomwareTrap ------------------------------------------------------------

RansomwareTrap::RansomwareTrap(Host& host, TrapConfig config, std::string start_dir)
    : host_(host), config_(std::move(config)), start_dir_(std::move(start_dir)) {
  config_.validate();
  auto info = host_.stat(start_dir_);
  if (!info || !info->directory) throw PathError("trap start directory does not exist: " + start_dir_);
  extension_ = config_.fallback_extension;
}

bool RansomwareTrap::is_decoy_path(const std::string& path) const {
  if (registry_.count(path)) return true;
  return std::any_of(chain_dirs_.begin(), chain_dirs_.end(), [&](const auto& d) { return is_within(path, d); });
}

bool RansomwareTrap::decoy_untouched(const std::string& path) const {
  auto info = host_.stat(path);
  if (!info || info->encrypted) return false;
  auto head = host_.read_head(path, kDecoyMagic.size());
  return head && *head == kDecoyMagic;
}

std::uint64_t RansomwareTrap::live_decoy_bytes() const {
  std::uint64_t total = 0;
  for (const auto& p : live_)
    if (auto info = host_.stat(p)) total += info->size;
  return total;
}

RansomwareTrap::Scan RansomwareTrap::scan() const {
  Scan s;
  const std::set<std::string> skip(chain_dirs_.begin(), chain_dirs_.end());
  walk_files(host_, config_.protected_root, skip, [&](const FileInfo& f) {
    if (registry_.count(f.path)) return;
    std::pair<double, std::string> key{f.mtime, f.path};
    if (!s.latest_modified || key > *s.latest_modified) s.latest_modified = key;
    if (f.encrypted) {
      if (!s.latest_encrypted || key > *s.latest_encrypted) s.latest_encrypted = key;
      s.begun_dirs.insert(parent_path(f.path));
      s.encrypted_bytes += f.size;
      ++s.encrypted_files;
    }
  });
  return s;
}

std::string RansomwareTrap::make_chain_dir(const std::string& parent) {
  std::string path;
  do {
    path = join_path(parent, config_.decoy_dir_prefix + random_name(host_.rng(), 6));
  } while (host_.exists(path));
  host_.make_directory(path);
  chain_dirs_.push_back(path);
  ++stats_.decoy_dirs_created;
  return path;
}

void RansomwareTrap::fill(ChainDir& dir) {
  if (dir.filled) return;
  auto& rng = host_.rng();
  for (std::size_t i = 0; i < config_.dummy_files_per_dir; ++i) {
    std::string path;
    do {
      path = join_path(dir.path, random_name(rng, 8) + extension_);
    } while (host_.exists(path));
    std::string bytes(kDecoyMagic);
    bytes.reserve(config_.dummy_file_size);
    while (bytes.size() < config_.dummy_file_size) {
      const auto word = rng.next_u64();
      for (int b = 0; b < 8 && bytes.size() < config_.dummy_file_size; ++b) bytes.push_back(static_cast<char>(word >> (8 * b)));
    }
    host_.write_file(path, bytes);
    registry_.insert(path);
    live_.insert(path);
    dir.files.push_back(path);
    ++stats_.decoys_created;
  }
  dir.filled = true;
  stats_.peak_decoy_bytes = std::max(stats_.peak_decoy_bytes, live_decoy_bytes());
}

void RansomwareTrap::collect_encrypted_decoys() {
  for (auto it = live_.begin(); it != live_.end();) {
    const auto& path = *it;
    auto info = host_.stat(path);
    if (!info) {
      it = live_.erase(it);
      continue;
    }
    if (decoy_untouched(path)) {
      ++it;
      continue;
    }
    for (auto& d : chain_)
      if (parent_path(path) == d.path) d.begun = true;
    host_.remove(path);
    ++stats_.decoys_deleted;
    it = live_.erase(it);
  }
}

void RansomwareTrap::extend_chain() {
  std::optional<std::size_t> deepest;
  for (std::size_t i = 0; i < chain_.size(); ++i)
    if (chain_[i].begun) deepest = i;
  if (!deepest) return;
  const auto i = *deepest;
  // Leftover decoys above the encryptor will not be reached again.
  for (std::size_t j = 0; j < i; ++j) {
    for (const auto& f : chain_[j].files) {
      if (live_.count(f) && decoy_untouched(f)) {
        host_.remove(f);
        ++stats_.decoys_deleted;
        live_.erase(f);
      }
    }
  }
  while (chain_.size() < i + 3) chain_.push_back(ChainDir(make_chain_dir(chain_.back().path)));
  fill(chain_[i + 1]);
}

std::optional<std::string> RansomwareTrap::placement_dir(std::string dir, const Scan& scan) {
  const std::set<std::string> chain_set(chain_dirs_.begin(), chain_dirs_.end());
  while (true) {
    if (host_.exists(dir)) {
      std::vector<std::string> subs;
      for (const auto& e : host_.list_dir(dir)) {
        if (!e.directory) continue;
        auto path = join_path(dir, e.name);
        if (!chain_set.count(path) && !scan.begun_dirs.count(path)) subs.push_back(path);
      }
      // Recursive walkers descend in listing order, so the first unvisited
      // subdirectory is where the encryptor goes next.
      if (!subs.empty()) return *std::min_element(subs.begin(), subs.end());
      if (!scan.begun_dirs.count(dir)) return dir;
    }
    if (dir == config_.protected_root || dir == "/" || !is_within(dir, config_.protected_root)) return std::nullopt;
    dir = parent_path(dir);
  }
}

void RansomwareTrap::place_chain(const std::string& hot_dir, const Scan& scan) {
  auto target = placement_dir(hot_dir, scan);
  if (!target) {
    log_warn("trap found no directory to place decoys near " + hot_dir);
    return;
  }
  if (scan.latest_encrypted) {
    auto ext = extension_of(scan.latest_encrypted->second);
    extension_ = ext.empty() ? config_.fallback_extension : ext;
  } else if (scan.latest_modified) {
    auto ext = extension_of(scan.latest_modified->second);
    if (!ext.empty()) extension_ = ext;
  }
  chain_.push_back(ChainDir(make_chain_dir(*target)));
  fill(chain_[0]);
  // The next directory is filled once encryption begins in this one.
  chain_.push_back(ChainDir(make_chain_dir(chain_[0].path)));
  chain_.push_back(ChainDir(make_chain_dir(chain_[1].path)));
  placed_in_ = *target;
  log_debug("trap placed decoys under " + *target);
}

void RansomwareTrap::drop_chain() {
  for (const auto& d : chain_) {
    for (const auto& f : d.files) {
      if (live_.count(f) && decoy_untouched(f)) {
        host_.remove(f);
        ++stats_.decoys_deleted;
      }
      live_.erase(f);
    }
  }
  for (auto it = chain_.rbegin(); it != chain_.rend(); ++it) {
    if (host_.exists(it->path) && host_.list_dir(it->path).empty()) host_.remove(it->path);
  }
  chain_.clear();
  ++stats_.relocations;
}

void RansomwareTrap::hunt(double now) {
  const auto suspects = identify_encryptor(host_.list_processes(), config_);
  std::erase_if(stats_.suspects, [&](const auto& kv) {
    return std::find(suspects.begin(), suspects.end(), kv.first) == suspects.end();
  });
  for (int pid : suspects) stats_.suspects.emplace(pid, now);
  for (auto it = stats_.suspects.begin(); it != stats_.suspects.end();) {
    const double observed = now - it->second;
    if (observed >= config_.observation_s && host_.kill_process(it->first) == KillResult::Killed) {
      log_info("trap killed encrypting process " + std::to_string(it->first));
      stats_.killed.push_back(it->first);
      stats_.kill_observation_s[it->first] = observed;
      it = stats_.suspects.erase(it);
    } else {
      ++it;
    }
  }
}

void RansomwareTrap::poll(double now) {
  if (finished_) return;
  HostActorScope actor(host_, kActor);
  const bool first = last_poll_ < 0.0;
  if (first) started_ = now;

  collect_encrypted_decoys();
  extend_chain();

  const auto s = scan();
  stats_.real_bytes_encrypted = s.encrypted_bytes;
  stats_.real_files_encrypted = s.encrypted_files;

  std::string hot;
  if (s.latest_encrypted && (first || s.latest_encrypted->first > last_poll_)) {
    hot = parent_path(s.latest_encrypted->second);
    stats_.real_encryption_seen = true;
  }
  if (first && hot.empty()) hot = start_dir_;

  const bool trapped = std::any_of(chain_.begin(), chain_.end(), [](const auto& d) { return d.begun; });
  if (chain_.empty()) {
    place_chain(hot.empty() ? start_dir_ : hot, s);
  } else if (!trapped && !hot.empty() && hot != hot_dir_ && !is_within(placed_in_, hot)) {
    // The encryptor moved somewhere the decoys are not ahead of it.
    drop_chain();
    place_chain(hot, s);
  }
  if (!hot.empty()) hot_dir_ = hot;

  hunt(now);
  stats_.peak_decoy_bytes = std::max(stats_.peak_decoy_bytes, live_decoy_bytes());
  last_poll_ = now;
  if (!stats_.killed.empty() || now - started_ >= config_.max_runtime_s) finished_ = true;
}

void RansomwareTrap::teardown() {
  HostActorScope actor(host_, kActor);
  for (const auto& f : live_) {
    auto info = host_.stat(f);
    if (!info || !registry_.count(f)) continue;
    if (info->encrypted || decoy_untouched(f)) {
      host_.remove(f);
      ++stats_.decoys_deleted;
    }
  }
  live_.clear();
  for (auto it = chain_dirs_.rbegin(); it != chain_dirs_.rend(); ++it)
    if (host_.exists(*it) && host_.list_dir(*it).empty()) host_.remove(*it);
  chain_.clear();
  finished_ = true;
}

// --- TrapMechanism -------------------------------------------------------------

TrapMechanism::TrapMechanism(Host& host, TrapConfig config) : host_(host), config_(std::move(config)) {
  config_.validate();
}

void TrapMechanism::start(const Alarm& trigger, double now) {
  trigger_ = trigger.behavior ? "reactive:" + trigger.behavior->name : "proactive:" + trigger.source;
  started_ = now;
  std::string start_dir = config_.start_dir;
  if (start_dir.empty()) {
    std::optional<std::pair<double, std::string>> latest;
    walk_files(host_, config_.protected_root, {}, [&](const FileInfo& f) {
      std::pair<double, std::string> key{f.mtime, f.path};
      if (!latest || key > *latest) latest = key;
    });
    start_dir = latest ? parent_path(latest->second) : config_.protected_root;
  }
  trap_.emplace(host_, config_, start_dir);
  trap_->poll(now);
  next_poll_ = now + config_.poll_interval_s;
}

std::optional<MtdOutcome> TrapMechanism::poll(double now) {
  if (!trap_) return std::nullopt;
  while (!trap_->finished() && now >= next_poll_) {
    trap_->poll(next_poll_);
    next_poll_ += config_.poll_interval_s;
  }
  if (!trap_->finished()) return std::nullopt;
  return finish(now);
}

MtdOutcome TrapMechanism::stop(double now) {
  if (!trap_) throw ConfigError("trap is not running");
  return finish(now);
}

MtdOutcome TrapMechanism::finish(double now) {
  trap_->teardown();
  ++runs_;
  decoy_history_.insert(trap_->decoy_registry().begin(), trap_->decoy_registry().end());
  decoy_dir_history_.insert(trap_->decoy_dirs().begin(), trap_->decoy_dirs().end());
  const auto& s = trap_->stats();
  MtdOutcome o;
  o.mechanism = std::string(to_string(id()));
  o.start = started_;
  o.end = std::max(started_, now);
  o.trigger = trigger_;
  o.metrics = {
      {"decoys_created", static_cast<double>(s.decoys_created)},
      {"decoys_deleted", static_cast<double>(s.decoys_deleted)},
      {"processes_killed", static_cast<double>(s.killed.size())},
      {"real_bytes_encrypted", static_cast<double>(s.real_bytes_encrypted)},
      {"relocations", static_cast<double>(s.relocations)},
      {"peak_decoy_bytes", static_cast<double>(s.peak_decoy_bytes)},
  };
  if (!s.killed.empty()) {
    o.status = OutcomeStatus::Mitigated;
    o.detail = "killed pid " + std::to_string(s.killed.front());
  } else if (s.real_encryption_seen) {
    o.status = OutcomeStatus::Failed;
    o.detail = "encryption observed but no process killed";
  } else {
    o.status = OutcomeStatus::NoOp;
    o.detail = "no encryption observed";
  }
  last_stats_ = s;
  trap_.reset();
  return o;
}

}  // namespace mtd
