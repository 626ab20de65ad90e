#pragma once

#include <string_view>

namespace c2::harness {

enum class LogLevel { Error = 0, Warn, Info, Debug };

/// Reads C2_LOG_LEVEL (error, warn, info, debug); defaults to info.
LogLevel log_level_from_env();
void set_log_level(LogLevel level);

/// Writes "[level] message" to stderr when `level` is enabled.
void log(LogLevel level, std::string_view message);

}  // namespace c2::harness
