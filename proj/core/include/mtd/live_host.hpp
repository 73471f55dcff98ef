#pragma once

#include <memory>
#include <set>
#include <string>

#include "mtd/environment.hpp"

namespace mtd {

struct LiveHostOptions {
  /// Every host path is resolved under this directory.
  std::string root = "/";
  /// Process names that must never be killed.
  std::set<std::string> whitelist;
  /// Reported addressing; the live host cannot change its address.
  NetworkSpec network;
  std::uint64_t seed = 0;
};

/// Host backed by the real filesystem (std::filesystem), /proc and kill(2).
/// IP assignment and service restarts throw NotConfigured.
/// Only available when built with MTD_HAS_LIVE_BACKEND.
std::unique_ptr<Host> make_live_host(const LiveHostOptions& options);

}  // namespace mtd
