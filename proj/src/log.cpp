#include "storylogic/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace storylogic::log {

namespace {

std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;
std::function<void(Level, std::string_view)> g_sink;

const char* tag(Level level) {
  switch (level) {
    case Level::warn:
      return "warning";
    case Level::info:
      return "info";
    case Level::debug:
      return "debug";
    case Level::quiet:
      break;
  }
  return "";
}

}  // namespace

void set_level(Level level) { g_level.store(level); }

Level level() { return g_level.load(); }

void set_sink(std::function<void(Level, std::string_view)> sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void write(Level level, std::string_view message) {
  if (level == Level::quiet || static_cast<int>(level) > static_cast<int>(g_level.load())) {
    return;
  }
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, message);
  } else {
    std::cerr << "[" << tag(level) << "] " << message << '\n';
  }
}

}  // namespace storylogic::log
