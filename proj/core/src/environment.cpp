#include "mtd/environment.hpp"

#include <algorithm>
#include <charconv>

#include "mtd/digest.hpp"
#include "mtd/error.hpp"

namespace mtd {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

void require_absolute(const std::string& path) {
  if (path.empty() || path.front() != '/') throw PathError("path must be absolute: '" + path + "'");
  if (path.size() > 1 && path.back() == '/') throw PathError("path has trailing slash: '" + path + "'");
  if (path.find("//") != std::string::npos) throw PathError("path has empty component: '" + path + "'");
}

constexpr double kOpenWindowS = 60.0;

}  // namespace

std::string_view to_string(KillResult r) {
  switch (r) {
    case KillResult::Killed: return "killed";
    case KillResult::NoSuchProcess: return "no_such_process";
    case KillResult::RefusedWhitelisted: return "refused_whitelisted";
  }
  return "?";
}

std::string_view to_string(AssignResult r) {
  switch (r) {
    case AssignResult::Assigned: return "assigned";
    case AssignResult::Collision: return "collision";
    case AssignResult::OutOfRange: return "out_of_range";
  }
  return "?";
}

std::string join_path(std::string_view dir, std::string_view name) {
  std::string out(dir);
  if (out.empty() || out.back() != '/') out.push_back('/');
  out.append(name);
  return out;
}

std::string parent_path(std::string_view path) {
  auto pos = path.rfind('/');
  if (pos == std::string_view::npos || pos == 0) return "/";
  return std::string(path.substr(0, pos));
}

std::string base_name(std::string_view path) {
  auto pos = path.rfind('/');
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

std::string extension_of(std::string_view path) {
  auto name = base_name(path);
  auto pos = name.rfind('.');
  if (pos == std::string::npos || pos == 0) return {};
  return name.substr(pos);
}

bool is_within(std::string_view path, std::string_view root) {
  if (root == "/") return !path.empty() && path.front() == '/';
  if (path.size() < root.size() || path.substr(0, root.size()) != root) return false;
  return path.size() == root.size() || path[root.size()] == '/';
}

// ---------------------------------------------------------------------------

SandboxEnvironment SandboxEnvironment::create(const EnvironmentSpec& spec) {
  SandboxEnvironment env;
  env.seed_ = spec.seed;
  env.rng_ = Rng(spec.seed);
  env.nodes_["/"] = Node::dir();

  env.subnet_ = Subnet::parse(spec.network.cidr);
  if (env.subnet_.host_count() < 2) throw ConfigError("subnet " + spec.network.cidr + " cannot hold a gateway and a device");
  env.gateway_ip_ = spec.network.gateway.empty() ? env.subnet_.first_host()
                                                 : Ipv4Address::parse_or_throw(spec.network.gateway, "network.gateway");
  env.device_ip_ = spec.network.device.empty() ? Ipv4Address{env.subnet_.first_host().value + 1}
                                               : Ipv4Address::parse_or_throw(spec.network.device, "network.device");
  if (env.device_ip_ == env.gateway_ip_ && spec.network.device.empty())
    env.device_ip_ = Ipv4Address{env.gateway_ip_.value + 1};
  if (!env.subnet_.contains_host(env.gateway_ip_))
    throw ConfigError("gateway " + env.gateway_ip_.to_string() + " outside subnet " + env.subnet_.to_string());
  if (!env.subnet_.contains_host(env.device_ip_))
    throw ConfigError("device address " + env.device_ip_.to_string() + " outside subnet " + env.subnet_.to_string());
  if (env.device_ip_ == env.gateway_ip_) throw ConfigError("device address equals gateway");
  for (const auto& p : spec.network.peers) {
    auto addr = Ipv4Address::parse_or_throw(p, "network.peers");
    if (!env.subnet_.contains_host(addr)) throw ConfigError("peer " + p + " outside subnet " + env.subnet_.to_string());
    if (addr == env.device_ip_ || addr == env.gateway_ip_) throw ConfigError("peer " + p + " duplicates device or gateway");
    env.peers_.insert(addr);
  }
  for (const auto& d : spec.network.dead) env.dead_.insert(Ipv4Address::parse_or_throw(d, "network.dead"));

  for (const auto& root : spec.files) {
    require_absolute(root.path);
    if (root.count > 0 && root.extensions.empty()) throw ConfigError("files root " + root.path + " has no extensions");
    env.make_directory(root.path);
    std::vector<std::string> dirs{root.path};
    const unsigned width = root.fanout > 100 ? 3 : 2;
    auto gen = [&](auto&& self, const std::string& dir, unsigned level) -> void {
      if (level >= root.depth) return;
      for (unsigned i = 0; i < root.fanout; ++i) {
        std::string idx = std::to_string(i);
        idx.insert(0, width > idx.size() ? width - idx.size() : 0, '0');
        auto child = join_path(dir, "d" + idx);
        if (!env.exists(child)) env.make_directory(child);
        dirs.push_back(child);
        self(self, child, level + 1);
      }
    };
    gen(gen, root.path, 0);
    const std::uint64_t base = root.count ? root.size_bytes / root.count : 0;
    const std::uint64_t extra = root.count ? root.size_bytes % root.count : 0;
    for (std::uint64_t i = 0; i < root.count; ++i) {
      std::string idx = std::to_string(i);
      idx.insert(0, idx.size() < 5 ? 5 - idx.size() : 0, '0');
      const auto& ext = root.extensions[i % root.extensions.size()];
      auto path = join_path(dirs[i % dirs.size()], "f" + idx + ext);
      if (env.exists(path)) throw ConfigError("duplicate path in file layout: " + path);
      env.create_sized_file(path, base + (i < extra ? 1 : 0));
    }
  }

  for (const auto& p : spec.processes) env.spawn_process(p.name, p.cpu, p.whitelisted);

  env.linker_ = spec.linker;
  if (spec.linker.enabled) {
    const auto& lk = spec.linker;
    require_absolute(lk.preload_path);
    require_absolute(lk.linker_path);
    if (lk.linker_ref_offset + lk.preload_path.size() + 1 > lk.linker_size)
      throw ConfigError("linker reference does not fit inside linker file");
    env.make_directory(parent_path(lk.preload_path));
    env.write_file(lk.preload_path, lk.preload_content);
    Rng bytes_rng = env.rng_.fork(0x11ef);
    std::string image(lk.linker_size, '\0');
    for (auto& c : image) c = static_cast<char>(bytes_rng.below(256));
    image.replace(0, 4, "\x7f" "ELF");
    image.replace(lk.linker_ref_offset, lk.preload_path.size(), lk.preload_path);
    image[lk.linker_ref_offset + lk.preload_path.size()] = '\0';
    env.make_directory(parent_path(lk.linker_path));
    env.write_file(lk.linker_path, image);
  }
  env.audit_.clear();
  env.events_.clear();
  return env;
}

SandboxEnvironment::Node* SandboxEnvironment::find(const std::string& path) {
  auto it = nodes_.find(path);
  return it == nodes_.end() ? nullptr : &it->second;
}

const SandboxEnvironment::Node* SandboxEnvironment::find(const std::string& path) const {
  auto it = nodes_.find(path);
  return it == nodes_.end() ? nullptr : &it->second;
}

void SandboxEnvironment::check_writable(const std::string& path) const {
  for (const auto& ro : read_only_)
    if (is_within(path, ro)) throw PermissionError("read-only location: " + path);
}

void SandboxEnvironment::attach(const std::string& path, Node node) {
  require_absolute(path);
  if (path == "/") throw PathError("cannot create root");
  check_writable(path);
  if (nodes_.count(path)) throw PathError("path exists: " + path);
  auto* parent = find(parent_path(path));
  if (!parent || !parent->directory) throw PathError("parent directory missing: " + parent_path(path));
  parent->children.insert(base_name(path));
  node.mtime = clock_;
  nodes_.emplace(path, std::move(node));
}

bool SandboxEnvironment::exists(const std::string& path) const { return find(path) != nullptr; }

std::optional<FileInfo> SandboxEnvironment::stat(const std::string& path) const {
  const auto* n = find(path);
  if (!n) return std::nullopt;
  return FileInfo{path, n->directory, n->size, n->digest, n->encrypted, n->mtime};
}

std::vector<std::string> SandboxEnvironment::hidden_prefixes() const {
  std::vector<std::string> out;
  if (hiders_.empty()) return out;
  auto content = effective_preload_content();
  if (!content) return out;
  for (const auto& [lib, prefix] : hiders_)
    if (content->find(lib) != std::string::npos) out.push_back(prefix);
  return out;
}

std::vector<DirEntry> SandboxEnvironment::list_dir(const std::string& path) const {
  const auto* n = find(path);
  if (!n || !n->directory) throw PathError("not a directory: " + path);
  const auto hidden = hidden_prefixes();
  std::vector<DirEntry> out;
  out.reserve(n->children.size());
  for (const auto& name : n->children) {
    bool hide = std::any_of(hidden.begin(), hidden.end(),
                            [&](const std::string& p) { return name.compare(0, p.size(), p) == 0; });
    if (hide) continue;
    out.push_back(DirEntry{name, find(join_path(path, name))->directory});
  }
  return out;
}

void SandboxEnvironment::make_directory(const std::string& path) {
  require_absolute(path);
  if (path == "/") return;
  std::string cur;
  std::size_t pos = 1;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string::npos) next = path.size();
    cur = path.substr(0, next);
    if (const auto* n = find(cur)) {
      if (!n->directory) throw PathError("not a directory: " + cur);
    } else {
      attach(cur, Node::dir());
      audit("mkdir", cur);
    }
    pos = next + 1;
  }
}

void SandboxEnvironment::write_file(const std::string& path, std::string_view bytes) {
  require_absolute(path);
  check_writable(path);
  if (auto* n = find(path)) {
    if (n->directory) throw PathError("is a directory: " + path);
    n->content = std::string(bytes);
    n->size = bytes.size();
    n->digest = sha256_hex(bytes);
    n->encrypted = false;
    n->mtime = clock_;
  } else {
    Node node;
    node.size = bytes.size();
    node.digest = sha256_hex(bytes);
    node.content = std::string(bytes);
    node.mtime = clock_;
    attach(path, std::move(node));
  }
  audit("write", path);
}

std::optional<std::string> SandboxEnvironment::read_file(const std::string& path) const {
  const auto* n = find(path);
  if (!n || n->directory) return std::nullopt;
  if (n->content) return n->content;
  // Sized files expose a deterministic byte pattern derived from the digest.
  std::string out;
  out.reserve(n->size);
  while (out.size() < n->size) out.append(n->digest, 0, std::min<std::size_t>(n->digest.size(), n->size - out.size()));
  return out;
}

std::optional<std::string> SandboxEnvironment::read_head(const std::string& path, std::size_t count) const {
  const auto* n = find(path);
  if (!n || n->directory) return std::nullopt;
  if (n->content) return n->content->substr(0, count);
  std::string out;
  const auto want = std::min<std::uint64_t>(count, n->size);
  while (out.size() < want) out.append(n->digest, 0, std::min<std::size_t>(n->digest.size(), want - out.size()));
  return out;
}

void SandboxEnvironment::remove(const std::string& path) {
  require_absolute(path);
  if (path == "/") throw PathError("cannot remove root");
  auto* n = find(path);
  if (!n) throw PathError("no such file or directory: " + path);
  if (n->directory && !n->children.empty()) throw PathError("directory not empty: " + path);
  check_writable(path);
  find(parent_path(path))->children.erase(base_name(path));
  nodes_.erase(path);
  audit("remove", path);
}

void SandboxEnvironment::rename(const std::string& from, const std::string& to) {
  require_absolute(from);
  require_absolute(to);
  auto* n = find(from);
  if (!n) throw PathError("no such file: " + from);
  if (n->directory) throw PathError("sandbox renames files only: " + from);
  if (exists(to)) throw PathError("target exists: " + to);
  auto* target_parent = find(parent_path(to));
  if (!target_parent || !target_parent->directory) throw PathError("target directory missing: " + parent_path(to));
  check_writable(from);
  check_writable(to);
  Node moved = std::move(*n);
  find(parent_path(from))->children.erase(base_name(from));
  nodes_.erase(from);
  find(parent_path(to))->children.insert(base_name(to));
  nodes_.emplace(to, std::move(moved));
  audit("rename", from + " -> " + to);
}

void SandboxEnvironment::create_sized_file(const std::string& path, std::uint64_t size) {
  Node node;
  node.size = size;
  node.digest = sha256_hex("sized:" + std::to_string(seed_) + ":" + path + ":" + std::to_string(content_counter_++));
  attach(path, std::move(node));
  audit("create", path);
}

bool SandboxEnvironment::encrypt_file(const std::string& path) {
  auto* n = find(path);
  if (!n || n->directory || n->encrypted) return false;
  check_writable(path);
  const auto stream = mix_seed(seed_, content_counter_++);
  if (n->content) {
    Rng ks(stream);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n->content->size(); ++i) {
      if (i % 8 == 0) word = ks.next_u64();
      (*n->content)[i] = static_cast<char>((*n->content)[i] ^ static_cast<char>(word >> (8 * (i % 8))));
    }
    n->digest = sha256_hex(*n->content);
  } else {
    n->digest = sha256_hex(n->digest + ":enc:" + std::to_string(stream));
  }
  n->encrypted = true;
  n->mtime = clock_;
  audit("encrypt", path);
  return true;
}

void SandboxEnvironment::set_read_only(const std::string& path_prefix, bool read_only) {
  if (read_only)
    read_only_.insert(path_prefix);
  else
    read_only_.erase(path_prefix);
}

std::vector<std::string> SandboxEnvironment::file_paths() const {
  std::vector<std::string> out;
  for (const auto& [path, n] : nodes_)
    if (!n.directory) out.push_back(path);
  return out;
}

std::size_t SandboxEnvironment::file_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const auto& kv) { return !kv.second.directory; }));
}

std::uint64_t SandboxEnvironment::total_file_bytes(std::string_view root) const {
  std::uint64_t total = 0;
  for (const auto& [path, n] : nodes_)
    if (!n.directory && is_within(path, root)) total += n.size;
  return total;
}

// --- clock -----------------------------------------------------------------

void SandboxEnvironment::tick(double seconds) {
  if (!(seconds >= 0.0)) throw ClockError("virtual clock cannot move backwards");
  clock_ += seconds;
}

void SandboxEnvironment::advance_to(double t) {
  if (t < clock_) throw ClockError("virtual clock cannot move backwards (" + fmt_double(t) + " < " + fmt_double(clock_) + ")");
  clock_ = t;
}

// --- processes ---------------------------------------------------------------

std::uint32_t SandboxEnvironment::opens_last_minute(const ProcState& p) const {
  return static_cast<std::uint32_t>(
      std::count_if(p.opens.begin(), p.opens.end(), [&](double t) { return t > clock_ - kOpenWindowS && t <= clock_; }));
}

std::vector<ProcessRecord> SandboxEnvironment::list_processes() const {
  std::vector<ProcessRecord> out;
  out.reserve(procs_.size());
  for (const auto& [pid, p] : procs_) {
    auto rec = p.record;
    rec.files_opened_last_minute = opens_last_minute(p);
    out.push_back(std::move(rec));
  }
  return out;
}

KillResult SandboxEnvironment::kill_process(int pid) {
  auto it = procs_.find(pid);
  if (it == procs_.end() || !it->second.record.alive) return KillResult::NoSuchProcess;
  if (it->second.record.whitelisted) return KillResult::RefusedWhitelisted;
  it->second.record.alive = false;
  it->second.record.cpu_percent = 0.0;
  audit("kill", "pid:" + std::to_string(pid));
  record_event("kill", it->second.record.name + "#" + std::to_string(pid));
  return KillResult::Killed;
}

int SandboxEnvironment::spawn_process(const std::string& name, double cpu_percent, bool whitelisted) {
  const int pid = next_pid_++;
  procs_[pid] = ProcState{ProcessRecord{pid, name, std::clamp(cpu_percent, 0.0, 100.0), 0, whitelisted, true}, {}};
  record_event("spawn", name + "#" + std::to_string(pid));
  return pid;
}

void SandboxEnvironment::set_cpu(int pid, double cpu_percent) {
  if (auto it = procs_.find(pid); it != procs_.end() && it->second.record.alive)
    it->second.record.cpu_percent = std::clamp(cpu_percent, 0.0, 100.0);
}

void SandboxEnvironment::note_file_open(int pid, const std::string& path) {
  auto it = procs_.find(pid);
  if (it == procs_.end()) return;
  auto& opens = it->second.opens;
  opens.push_back(clock_);
  while (!opens.empty() && opens.front() <= clock_ - kOpenWindowS) opens.pop_front();
  audit("open", path);
}

void SandboxEnvironment::exit_process(int pid) {
  if (auto it = procs_.find(pid); it != procs_.end() && it->second.record.alive) {
    it->second.record.alive = false;
    it->second.record.cpu_percent = 0.0;
    record_event("exit", it->second.record.name + "#" + std::to_string(pid));
  }
}

bool SandboxEnvironment::is_alive(int pid) const {
  auto it = procs_.find(pid);
  return it != procs_.end() && it->second.record.alive;
}

// --- network -----------------------------------------------------------------

void SandboxEnvironment::add_peer(Ipv4Address addr) {
  if (!subnet_.contains_host(addr)) throw ConfigError("peer " + addr.to_string() + " outside subnet");
  if (addr == device_ip_ || addr == gateway_ip_) throw ConfigError("peer duplicates device or gateway");
  peers_.insert(addr);
}

std::vector<Ipv4Address> SandboxEnvironment::scan_active_hosts() const {
  std::set<Ipv4Address> all = peers_;
  all.insert(device_ip_);
  all.insert(gateway_ip_);
  return {all.begin(), all.end()};
}

AssignResult SandboxEnvironment::assign_ip(Ipv4Address addr) {
  if (!subnet_.contains_host(addr)) return AssignResult::OutOfRange;
  if (addr == gateway_ip_ || peers_.count(addr)) return AssignResult::Collision;
  const auto old = device_ip_;
  device_ip_ = addr;
  audit("assign_ip", addr.to_string());
  record_event("ip_change", old.to_string() + " -> " + addr.to_string());
  return AssignResult::Assigned;
}

bool SandboxEnvironment::check_connectivity() const { return dead_.count(device_ip_) == 0; }

void SandboxEnvironment::restart_services(const std::string& reason) { record_event("service_restart", reason); }

// --- loader model --------------------------------------------------------------

void SandboxEnvironment::register_hider(const std::string& library_path, const std::string& name_prefix) {
  hiders_[library_path] = name_prefix;
}

std::string SandboxEnvironment::linker_reference() const {
  if (!linker_.enabled) return {};
  const auto* n = find(linker_.linker_path);
  if (!n || !n->content || linker_.linker_ref_offset >= n->content->size()) return {};
  const auto& c = *n->content;
  auto end = c.find('\0', linker_.linker_ref_offset);
  if (end == std::string::npos) end = c.size();
  return c.substr(linker_.linker_ref_offset, std::min<std::size_t>(end - linker_.linker_ref_offset, 4096));
}

std::optional<std::string> SandboxEnvironment::effective_preload_content() const {
  auto ref = linker_reference();
  if (ref.empty() || ref.front() != '/') return std::nullopt;
  const auto* n = find(ref);
  if (!n || n->directory || !n->content) return std::nullopt;
  return n->content;
}

bool SandboxEnvironment::hiding_active() const { return !hidden_prefixes().empty(); }

// --- audit -------------------------------------------------------------------

void SandboxEnvironment::record_event(const std::string& kind, const std::string& detail) {
  events_.push_back(EnvEvent{clock_, kind, detail});
}

void SandboxEnvironment::audit(const std::string& op, const std::string& target) {
  audit_.push_back(AuditEntry{clock_, actor_, op, target});
}

std::string SandboxEnvironment::state_digest() const {
  Sha256 h;
  h.field("mtd-sandbox-state-v1");
  h.field(fmt_double(clock_));
  h.field(subnet_.to_string()).field(device_ip_.to_string()).field(gateway_ip_.to_string());
  for (const auto& p : peers_) h.field("peer").field(p.to_string());
  for (const auto& d : dead_) h.field("dead").field(d.to_string());
  for (const auto& [path, n] : nodes_) {
    h.field(path).field(n.directory ? "d" : "f").field(std::to_string(n.size)).field(n.digest);
    h.field(n.encrypted ? "1" : "0").field(fmt_double(n.mtime));
  }
  for (const auto& [pid, p] : procs_) {
    h.field(std::to_string(pid)).field(p.record.name).field(fmt_double(p.record.cpu_percent));
    h.field(p.record.alive ? "1" : "0").field(p.record.whitelisted ? "1" : "0");
    h.field(std::to_string(opens_last_minute(p)));
  }
  for (const auto& [lib, prefix] : hiders_) h.field(lib).field(prefix);
  for (const auto& ro : read_only_) h.field("ro").field(ro);
  return h.hex_digest();
}

}  // namespace mtd
