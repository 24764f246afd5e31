#pragma once

#include <cstdarg>

namespace gas::log {

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

void set_level(Level level);
Level level();

// printf-style; writes to stderr, prefixed with a timestamp and level tag.
void error(const char* fmt, ...);
void info(const char* fmt, ...);
void debug(const char* fmt, ...);

}  // namespace gas::log
