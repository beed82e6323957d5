#include "comad/log.hpp"

#include <iostream>
#include <mutex>

namespace comad {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void default_sink(LogLevel level, const std::string& msg) {
    if (level == LogLevel::Warning) {
        std::cerr << "warning: " << msg << '\n';
    }
}

LogSink& sink() {
    static LogSink s = default_sink;
    return s;
}

void emit(LogLevel level, const std::string& msg) {
    std::lock_guard lock(sink_mutex());
    if (sink()) {
        sink()(level, msg);
    }
}

} // namespace

void set_log_sink(LogSink s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void reset_log_sink() { set_log_sink(default_sink); }

void log_info(const std::string& msg) { emit(LogLevel::Info, msg); }
void log_warning(const std::string& msg) { emit(LogLevel::Warning, msg); }

} // namespace comad
