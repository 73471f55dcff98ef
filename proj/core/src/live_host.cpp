#include "mtd/live_host.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <iterator>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtd/digest.hpp"
#include "mtd/error.hpp"

namespace mtd {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p, std::size_t limit = std::string::npos) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::string out;
  if (limit == std::string::npos) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  out.resize(limit);
  in.read(out.data(), static_cast<std::streamsize>(limit));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

class LiveHost final : public Host {
 public:
  explicit LiveHost(const LiveHostOptions& o)
      : root_(o.root), whitelist_(o.whitelist), rng_(o.seed), start_(std::chrono::steady_clock::now()) {
    subnet_ = Subnet::parse(o.network.cidr);
    gateway_ = o.network.gateway.empty() ? subnet_.first_host() : Ipv4Address::parse_or_throw(o.network.gateway, "gateway");
    device_ = o.network.device.empty() ? Ipv4Address{subnet_.first_host().value + 1}
                                       : Ipv4Address::parse_or_throw(o.network.device, "device");
  }

  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  Rng& rng() override { return rng_; }

  bool exists(const std::string& path) const override { return fs::exists(real(path)); }

  std::optional<FileInfo> stat(const std::string& path) const override {
    std::error_code ec;
    auto st = fs::status(real(path), ec);
    if (ec || !fs::exists(st)) return std::nullopt;
    FileInfo info;
    info.path = path;
    info.directory = fs::is_directory(st);
    if (!info.directory) {
      info.size = fs::file_size(real(path), ec);
      const auto head = slurp(real(path), 8);
      info.encrypted = head.rfind("ENC", 0) == 0;
    }
    auto mt = fs::last_write_time(real(path), ec);
    info.mtime = std::chrono::duration<double>(mt.time_since_epoch()).count();
    return info;
  }

  std::vector<DirEntry> list_dir(const std::string& path) const override {
    std::vector<DirEntry> out;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(real(path), ec)) out.push_back({e.path().filename().string(), e.is_directory()});
    if (ec) throw PathError("cannot list '" + path + "': " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
  }

  void make_directory(const std::string& path) override {
    std::error_code ec;
    fs::create_directories(real(path), ec);
    if (ec) throw PathError("cannot create '" + path + "': " + ec.message());
  }

  void write_file(const std::string& path, std::string_view bytes) override {
    std::ofstream out(real(path), std::ios::binary | std::ios::trunc);
    if (!out) throw PermissionError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  std::optional<std::string> read_file(const std::string& path) const override {
    if (!fs::is_regular_file(real(path))) return std::nullopt;
    return slurp(real(path));
  }
  std::optional<std::string> read_head(const std::string& path, std::size_t n) const override {
    if (!fs::is_regular_file(real(path))) return std::nullopt;
    return slurp(real(path), n);
  }

  void remove(const std::string& path) override {
    std::error_code ec;
    if (!fs::remove(real(path), ec) || ec) throw PathError("cannot remove '" + path + "'");
  }
  void rename(const std::string& from, const std::string& to) override {
    if (fs::exists(real(to))) throw PathError("rename target '" + to + "' exists");
    std::error_code ec;
    fs::rename(real(from), real(to), ec);
    if (ec) throw PathError("cannot rename '" + from + "': " + ec.message());
  }

  std::vector<ProcessRecord> list_processes() const override {
    std::vector<ProcessRecord> out;
    const double ticks = static_cast<double>(sysconf(_SC_CLK_TCK));
    const double uptime = std::stod(slurp("/proc/uptime").empty() ? "0" : slurp("/proc/uptime"));
    for (const auto& e : fs::directory_iterator("/proc")) {
      const auto name = e.path().filename().string();
      if (name.find_first_not_of("0123456789") != std::string::npos) continue;
      ProcessRecord p;
      p.pid = std::stoi(name);
      auto stat = slurp(e.path() / "stat");
      auto close = stat.rfind(')');
      if (close == std::string::npos) continue;
      p.name = stat.substr(stat.find('(') + 1, close - stat.find('(') - 1);
      std::istringstream rest(stat.substr(close + 2));
      std::vector<std::string> f{std::istream_iterator<std::string>(rest), {}};
      // fields after the name: state is index 0, utime 11, stime 12, starttime 19
      if (f.size() > 19) {
        const double cpu_s = (std::stod(f[11]) + std::stod(f[12])) / ticks;
        const double age = uptime - std::stod(f[19]) / ticks;
        p.cpu_percent = age > 0 ? 100.0 * cpu_s / age : 0.0;
      }
      std::error_code ec;
      for (auto it = fs::directory_iterator(e.path() / "fd", ec); !ec && it != fs::directory_iterator(); it.increment(ec))
        ++p.files_opened_last_minute;
      p.whitelisted = whitelist_.count(p.name) > 0 || p.pid == getpid() || p.pid == 1;
      out.push_back(std::move(p));
    }
    return out;
  }

  KillResult kill_process(int pid) override {
    for (const auto& p : list_processes())
      if (p.pid == pid && p.whitelisted) return KillResult::RefusedWhitelisted;
    return ::kill(pid, SIGKILL) == 0 ? KillResult::Killed : KillResult::NoSuchProcess;
  }

  Subnet subnet() const override { return subnet_; }
  Ipv4Address device_ip() const override { return device_; }
  Ipv4Address gateway_ip() const override { return gateway_; }
  std::vector<Ipv4Address> scan_active_hosts() const override {
    throw NotConfigured("network scanning is not available on the live host");
  }
  AssignResult assign_ip(Ipv4Address) override {
    throw NotConfigured("address assignment is not available on the live host");
  }
  bool check_connectivity() const override { return true; }
  void restart_services(const std::string&) override {
    throw NotConfigured("service restart is not available on the live host");
  }

 private:
  fs::path real(const std::string& path) const {
    fs::path rel = fs::path(path).relative_path();
    return root_ / rel;
  }

  fs::path root_;
  std::set<std::string> whitelist_;
  Rng rng_;
  std::chrono::steady_clock::time_point start_;
  Subnet subnet_;
  Ipv4Address gateway_;
  Ipv4Address device_;
};

}  // namespace

std::unique_ptr<Host> make_live_host(const LiveHostOptions& options) { return std::make_unique<LiveHost>(options); }

}  // namespace mtd
