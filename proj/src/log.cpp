#include "missforest/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace missforest {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("MISSFOREST_LOG");
  if (env == nullptr) return LogLevel::Warn;
  std::string s(env);
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "trace") return LogLevel::Trace;
  return LogLevel::Warn;
}

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Trace: return "trace";
  }
  return "?";
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::lock_guard<std::mutex> lock(log_mutex());
  std::fprintf(stderr, "[missforest %s] %s\n", level_name(level), message.c_str());
}

}  // namespace missforest
