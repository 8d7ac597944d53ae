#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace intralayer {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level_from_env() {
    const char* v = std::getenv("INTRALAYER_SIM_LOG_LEVEL");
    if (!v) return LogLevel::Warn;
    std::string s(v);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

inline LogLevel& log_level() {
    static LogLevel level = log_level_from_env();
    return level;
}

inline void log(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    const char* tag = level == LogLevel::Error  ? "error"
                      : level == LogLevel::Warn ? "warn"
                      : level == LogLevel::Info ? "info"
                                                : "debug";
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

} // namespace intralayer
