#include "segfair/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace segfair {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};

void emit(const char* tag, const std::string& msg) {
    std::fprintf(stderr, "[segfair] %s: %s\n", tag, msg.c_str());
}
} // namespace

void set_log_level(LogLevel level) { g_level.store(level); }

LogLevel log_level() { return g_level.load(); }

void init_log_from_env() {
    const char* v = std::getenv("SEGFAIR_LOG");
    if (v == nullptr) return;
    if (std::strcmp(v, "error") == 0) set_log_level(LogLevel::Error);
    else if (std::strcmp(v, "warn") == 0) set_log_level(LogLevel::Warn);
    else if (std::strcmp(v, "info") == 0) set_log_level(LogLevel::Info);
    else if (std::strcmp(v, "debug") == 0) set_log_level(LogLevel::Debug);
}

void log_error(const std::string& msg) {
    if (log_level() >= LogLevel::Error) emit("error", msg);
}

void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::Warn) emit("warn", msg);
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) emit("info", msg);
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) emit("debug", msg);
}

} // namespace segfair
