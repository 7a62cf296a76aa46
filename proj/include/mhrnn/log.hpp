#pragma once

#include <functional>
#include <string>

namespace mhrnn::log {

enum class Level { debug, info, warning };

using Sink = std::function<void(Level, const std::string&)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink writes warnings to stderr and drops everything else.
Sink set_sink(Sink sink);

void set_verbose(bool verbose);

void debug(const std::string& message);
void info(const std::string& message);
void warning(const std::string& message);

}  // namespace mhrnn::log
