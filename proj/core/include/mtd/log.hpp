#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace mtd {

/// Sets the framework log level from `level` or, when absent, from the
/// MTD_LOG environment variable (trace|debug|info|warn|error|off). Logs go to
/// stderr. Defaults to warn.
void configure_logging(std::optional<std::string> level = std::nullopt);

/// Receives every emitted message (level name, text) besides stderr. An empty
/// hook detaches.
using LogHook = std::function<void(std::string_view level, const std::string& msg)>;
void set_log_hook(LogHook hook);

void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);
void log_error(const std::string& msg);

}  // namespace mtd
