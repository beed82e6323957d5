#pragma once

#include <functional>
#include <string>

namespace comad {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink. Passing an empty function silences output.
/// Default sink writes warnings to stderr and drops info messages.
void set_log_sink(LogSink sink);

/// Restores the default sink.
void reset_log_sink();

void log_info(const std::string& msg);
void log_warning(const std::string& msg);

} // namespace comad
