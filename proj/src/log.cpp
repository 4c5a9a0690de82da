#include "sflick/log.hpp"

#include <iostream>
#include <mutex>

namespace sflick {
namespace {
std::mutex g_mutex;
LogSink g_sink = [](const std::string& msg) { std::cerr << "[sflick] " << msg << '\n'; };
}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void log_line(const std::string& msg) {
  std::lock_guard lock(g_mutex);
  if (g_sink) g_sink(msg);
}

}  // namespace sflick
