#pragma once

#include <string>

namespace segfair {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Reads the SEGFAIR_LOG environment variable (error|warn|info|debug).
// Unset or unrecognized values leave the default (warn) in place.
void init_log_from_env();

void log_error(const std::string& msg);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace segfair
