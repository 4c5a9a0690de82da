#pragma once

#include <functional>
#include <string>

namespace sflick {

using LogSink = std::function<void(const std::string&)>;

/// Replaces the stage logger. An empty sink silences logging; the default
/// writes one line per message to stderr.
void set_log_sink(LogSink sink);
void log_line(const std::string& msg);

}  // namespace sflick
