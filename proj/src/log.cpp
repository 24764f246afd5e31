#include "gas/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace gas::log {

namespace {

std::atomic<int> g_level{static_cast<int>(Level::kInfo)};

void emit(const char* tag, const char* fmt, va_list args) {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%H:%M:%S", &tm);
    std::fprintf(stderr, "[%s %s] ", stamp, tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

}  // namespace

void set_level(Level level) { g_level.store(static_cast<int>(level)); }
Level level() { return static_cast<Level>(g_level.load()); }

void error(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    emit("error", fmt, args);
    va_end(args);
}

void info(const char* fmt, ...) {
    if (g_level.load() < static_cast<int>(Level::kInfo)) return;
    va_list args;
    va_start(args, fmt);
    emit("info", fmt, args);
    va_end(args);
}

void debug(const char* fmt, ...) {
    if (g_level.load() < static_cast<int>(Level::kDebug)) return;
    va_list args;
    va_start(args, fmt);
    emit("debug", fmt, args);
    va_end(args);
}

}  // namespace gas::log
