#include "toftomo/log.hpp"

#include <iostream>
#include <mutex>
#include <set>

namespace toftomo {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
    std::lock_guard<std::mutex> lock(sink_mutex());
    sink() = std::move(s);
}

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(sink_mutex());
    if (sink()) sink()(message);
}

void warn_once(const std::string& tag, const std::string& message) {
    static std::mutex seen_mutex;
    static std::set<std::string> seen;
    {
        std::lock_guard<std::mutex> lock(seen_mutex);
        if (!seen.insert(tag).second) return;
    }
    warn(message);
}

}  // namespace toftomo
