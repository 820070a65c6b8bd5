#pragma once

#include <string>

namespace missforest {

// Verbosity is read once from the MISSFOREST_LOG environment variable
// (error | warn | info | trace); the default is warn.
enum class LogLevel { Error = 0, Warn = 1, Info = 2, Trace = 3 };

LogLevel log_level();
void log_message(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log_message(LogLevel::Error, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::Warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::Info, m); }
inline void log_trace(const std::string& m) { log_message(LogLevel::Trace, m); }

}  // namespace missforest
