#pragma once

#include <functional>
#include <string_view>

namespace storylogic::log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

void set_level(Level level);
Level level();

// Replaces the default stderr sink. Thread-safe; the sink is called under a lock.
void set_sink(std::function<void(Level, std::string_view)> sink);

void write(Level level, std::string_view message);
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace storylogic::log
