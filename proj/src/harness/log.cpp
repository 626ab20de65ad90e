#include "c2/harness/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>

namespace c2::harness {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_mutex;

constexpr std::string_view name_of(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "info";
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("C2_LOG_LEVEL");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  for (auto l : {LogLevel::Error, LogLevel::Warn, LogLevel::Info, LogLevel::Debug}) {
    if (s == name_of(l)) return l;
  }
  return LogLevel::Info;
}

void set_log_level(LogLevel level) { g_level = level; }

void log(LogLevel level, std::string_view message) {
  if (level > g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[%.*s] %.*s\n", static_cast<int>(name_of(level).size()), name_of(level).data(),
               static_cast<int>(message.size()), message.data());
}

}  // namespace c2::harness
