#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mtd/ipv4.hpp"
#include "mtd/rng.hpp"

namespace mtd {

// ---------------------------------------------------------------------------
// Value types shared by every backend
// ---------------------------------------------------------------------------

struct FileInfo {
  std::string path;
  bool directory = false;
  std::uint64_t size = 0;
  std::string digest;
  bool encrypted = false;
  double mtime = 0.0;
};

struct DirEntry {
  std::string name;
  bool directory = false;
  auto operator<=>(const DirEntry&) const = default;
};

struct ProcessRecord {
  int pid = 0;
  std::string name;
  double cpu_percent = 0.0;
  std::uint32_t files_opened_last_minute = 0;
  bool whitelisted = false;
  bool alive = true;
};

enum class KillResult { Killed, NoSuchProcess, RefusedWhitelisted };
enum class AssignResult { Assigned, Collision, OutOfRange };

std::string_view to_string(KillResult r);
std::string_view to_string(AssignResult r);

// Virtual paths are absolute, '/'-separated, without trailing slash.
std::string join_path(std::string_view dir, std::string_view name);
std::string parent_path(std::string_view path);
std::string base_name(std::string_view path);
/// Extension including the dot (".pdf"), or empty. Leading-dot names such as
/// ".profile" have no extension.
std::string extension_of(std::string_view path);
/// True when `path` equals `root` or lies beneath it.
bool is_within(std::string_view path, std::string_view root);

// ---------------------------------------------------------------------------
// Host: the only surface mechanisms use to observe or change the device.
// ---------------------------------------------------------------------------

class Host {
 public:
  virtual ~Host() = default;

  virtual double now() const = 0;
  virtual Rng& rng() = 0;

  virtual bool exists(const std::string& path) const = 0;
  virtual std::optional<FileInfo> stat(const std::string& path) const = 0;
  /// Entries sorted by name. Throws PathError when `path` is not a directory.
  virtual std::vector<DirEntry> list_dir(const std::string& path) const = 0;
  /// Creates missing parents. Throws PermissionError on read-only locations.
  virtual void make_directory(const std::string& path) = 0;
  virtual void write_file(const std::string& path, std::string_view bytes) = 0;
  virtual std::optional<std::string> read_file(const std::string& path) const = 0;
  virtual std::optional<std::string> read_head(const std::string& path, std::size_t n) const = 0;
  /// Removes a file or an empty directory.
  virtual void remove(const std::string& path) = 0;
  virtual void rename(const std::string& from, const std::string& to) = 0;

  virtual std::vector<ProcessRecord> list_processes() const = 0;
  virtual KillResult kill_process(int pid) = 0;

  virtual Subnet subnet() const = 0;
  virtual Ipv4Address device_ip() const = 0;
  virtual Ipv4Address gateway_ip() const = 0;
  virtual std::vector<Ipv4Address> scan_active_hosts() const = 0;
  virtual AssignResult assign_ip(Ipv4Address addr) = 0;
  virtual bool check_connectivity() const = 0;
  virtual void restart_services(const std::string& reason) = 0;
};

// ---------------------------------------------------------------------------
// Environment specification
// ---------------------------------------------------------------------------

struct FileRootSpec {
  std::string path;
  std::uint64_t count = 0;
  /// Total bytes spread evenly across the `count` files of this root.
  std::uint64_t size_bytes = 0;
  std::vector<std::string> extensions{".dat"};
  /// Subdirectories per directory; 0 keeps every file directly in `path`.
  unsigned fanout = 0;
  unsigned depth = 0;
};

struct ProcessSpec {
  std::string name;
  double cpu = 0.0;
  bool whitelisted = false;
};

struct NetworkSpec {
  std::string cidr = "192.168.1.0/24";
  std::string gateway;  // default: first host address
  std::string device;   // default: second host address
  std::vector<std::string> peers;
  /// Addresses at which the device has no internet connectivity.
  std::vector<std::string> dead;
};

struct LinkerSpec {
  bool enabled = false;
  std::string preload_path = "/etc/ld.so.preload";
  std::string preload_content = "/lib/arm-linux-gnueabihf/libc.so.6\n";
  std::string linker_path = "/lib/arm-linux-gnueabihf/ld-2.24.so";
  std::uint64_t linker_size = 4096;
  std::uint64_t linker_ref_offset = 1024;
};

struct EnvironmentSpec {
  NetworkSpec network;
  std::vector<FileRootSpec> files;
  std::vector<ProcessSpec> processes;
  LinkerSpec linker;
  std::uint64_t seed = 0;
};

/// Parses the TOML environment document ([network], [files], [processes],
/// [linker], seed). Throws ConfigError with a diagnostic.
EnvironmentSpec parse_environment_spec(std::string_view toml_text);
EnvironmentSpec load_environment_spec(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sandbox backend
// ---------------------------------------------------------------------------

struct AuditEntry {
  double time = 0.0;
  std::string actor;
  std::string op;
  std::string target;
};

struct EnvEvent {
  double time = 0.0;
  std::string kind;
  std::string detail;
};

/// Deterministic in-memory device: virtual file tree, process table, subnet
/// and clock. Single writer; copies are independent snapshots.
class SandboxEnvironment final : public Host {
 public:
  /// Materializes `spec`. Throws ConfigError on invalid CIDR, addresses
  /// outside the subnet or duplicate layout paths.
  static SandboxEnvironment create(const EnvironmentSpec& spec);

  // Host
  double now() const override { return clock_; }
  Rng& rng() override { return rng_; }
  bool exists(const std::string& path) const override;
  std::optional<FileInfo> stat(const std::string& path) const override;
  std::vector<DirEntry> list_dir(const std::string& path) const override;
  void make_directory(const std::string& path) override;
  void write_file(const std::string& path, std::string_view bytes) override;
  std::optional<std::string> read_file(const std::string& path) const override;
  std::optional<std::string> read_head(const std::string& path, std::size_t n) const override;
  void remove(const std::string& path) override;
  void rename(const std::string& from, const std::string& to) override;
  std::vector<ProcessRecord> list_processes() const override;
  KillResult kill_process(int pid) override;
  Subnet subnet() const override { return subnet_; }
  Ipv4Address device_ip() const override { return device_ip_; }
  Ipv4Address gateway_ip() const override { return gateway_ip_; }
  std::vector<Ipv4Address> scan_active_hosts() const override;
  AssignResult assign_ip(Ipv4Address addr) override;
  bool check_connectivity() const override;
  void restart_services(const std::string& reason) override;

  // Clock. Time never moves backwards (ClockError).
  void tick(double seconds);
  void advance_to(double t);

  // Files (sandbox-only operations used by layouts and emulators)
  void create_sized_file(const std::string& path, std::uint64_t size);
  /// Marks a file encrypted and changes its digest (and bytes, when the file
  /// carries content). Returns false when the file is missing or already
  /// encrypted.
  bool encrypt_file(const std::string& path);
  void set_read_only(const std::string& path_prefix, bool read_only = true);
  std::vector<std::string> file_paths() const;
  std::size_t file_count() const;
  std::uint64_t total_file_bytes(std::string_view root = "/") const;

  // Processes
  int spawn_process(const std::string& name, double cpu_percent, bool whitelisted = false);
  void set_cpu(int pid, double cpu_percent);
  /// Records a file open by `pid` for the rolling one-minute counter.
  void note_file_open(int pid, const std::string& path);
  void exit_process(int pid);
  bool is_alive(int pid) const;

  // Network
  void add_peer(Ipv4Address addr);
  void set_dead_addresses(std::set<Ipv4Address> dead) { dead_ = std::move(dead); }
  void add_dead_address(Ipv4Address addr) { dead_.insert(addr); }

  // Loader model: listings hide names with a registered prefix while the
  // preload file reachable through the linker reference names the library.
  const LinkerSpec& linker() const { return linker_; }
  void register_hider(const std::string& library_path, const std::string& name_prefix);
  std::optional<std::string> effective_preload_content() const;
  std::string linker_reference() const;
  bool hiding_active() const;

  // Actor attribution for the audit log.
  const std::string& actor() const { return actor_; }
  void set_actor(std::string actor) { actor_ = std::move(actor); }
  const std::vector<AuditEntry>& audit_log() const { return audit_; }
  const std::vector<EnvEvent>& events() const { return events_; }
  void record_event(const std::string& kind, const std::string& detail);
  void audit(const std::string& op, const std::string& target);

  /// Lowercase hex SHA-256 over a canonical serialization of the full state.
  std::string state_digest() const;

 private:
  struct Node {
    bool directory = false;
    std::uint64_t size = 0;
    std::string digest;
    bool encrypted = false;
    std::optional<std::string> content;
    double mtime = 0.0;
    std::set<std::string> children;

    static Node dir() {
      Node n;
      n.directory = true;
      return n;
    }
  };
  struct ProcState {
    ProcessRecord record;
    std::deque<double> opens;
  };

  SandboxEnvironment() = default;
  Node* find(const std::string& path);
  const Node* find(const std::string& path) const;
  void check_writable(const std::string& path) const;
  void attach(const std::string& path, Node node);
  std::uint32_t opens_last_minute(const ProcState& p) const;
  std::vector<std::string> hidden_prefixes() const;

  std::map<std::string, Node> nodes_;
  std::map<int, ProcState> procs_;
  int next_pid_ = 100;
  Subnet subnet_;
  Ipv4Address device_ip_{};
  Ipv4Address gateway_ip_{};
  std::set<Ipv4Address> peers_;
  std::set<Ipv4Address> dead_;
  LinkerSpec linker_;
  std::map<std::string, std::string> hiders_;  // library path -> name prefix
  std::set<std::string> read_only_;
  double clock_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t content_counter_ = 0;
  Rng rng_;
  std::string actor_ = "system";
  std::vector<AuditEntry> audit_;
  std::vector<EnvEvent> events_;
};

/// Attributes sandbox mutations to `actor` for the lifetime of the scope.
class ActorScope {
 public:
  ActorScope(SandboxEnvironment& env, std::string actor) : env_(env), previous_(env.actor()) {
    env_.set_actor(std::move(actor));
  }
  ~ActorScope() { env_.set_actor(previous_); }
  ActorScope(const ActorScope&) = delete;
  ActorScope& operator=(const ActorScope&) = delete;

 private:
  SandboxEnvironment& env_;
  std::string previous_;
};

/// ActorScope for any Host; a no-op unless the host is a sandbox.
class HostActorScope {
 public:
  HostActorScope(Host& host, std::string actor) : env_(dynamic_cast<SandboxEnvironment*>(&host)) {
    if (env_) {
      previous_ = env_->actor();
      env_->set_actor(std::move(actor));
    }
  }
  ~HostActorScope() {
    if (env_) env_->set_actor(previous_);
  }
  HostActorScope(const HostActorScope&) = delete;
  HostActorScope& operator=(const HostActorScope&) = delete;

 private:
  SandboxEnvironment* env_;
  std::string previous_;
};

}  // namespace mtd
