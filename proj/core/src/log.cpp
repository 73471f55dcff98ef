#include "mtd/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace mtd {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("mtd");
    instance->set_pattern("[%l] %v");
    instance->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("MTD_LOG")) instance->set_level(spdlog::level::from_str(env));
  });
  return instance;
}

std::mutex hook_mu;
LogHook hook;

void emit(spdlog::level::level_enum level, const std::string& msg) {
  auto l = logger();
  if (!l->should_log(level)) return;
  l->log(level, msg);
  std::lock_guard lock(hook_mu);
  if (hook) {
    auto name = spdlog::level::to_string_view(level);
    hook(std::string_view(name.data(), name.size()), msg);
  }
}

}  // namespace

void set_log_hook(LogHook h) {
  std::lock_guard lock(hook_mu);
  hook = std::move(h);
}

void configure_logging(std::optional<std::string> level) {
  if (!level) {
    if (const char* env = std::getenv("MTD_LOG")) level = env;
  }
  if (level) logger()->set_level(spdlog::level::from_str(*level));
}

void log_debug(const std::string& msg) { emit(spdlog::level::debug, msg); }
void log_info(const std::string& msg) { emit(spdlog::level::info, msg); }
void log_warn(const std::string& msg) { emit(spdlog::level::warn, msg); }
void log_error(const std::string& msg) { emit(spdlog::level::err, msg); }

}  // namespace mtd
