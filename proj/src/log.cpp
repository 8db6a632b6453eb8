#include "oculolipid/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace oculolipid::log {

namespace {

Level parse_level(const char* s) {
    std::string v = s ? s : "";
    for (auto& c : v) c = static_cast<char>(::tolower(static_cast<unsigned char>(c)));
    if (v == "debug") return Level::Debug;
    if (v == "info" || v.empty()) return Level::Info;
    if (v == "warn" || v == "warning") return Level::Warn;
    if (v == "error") return Level::Error;
    if (v == "off" || v == "none") return Level::Off;
    return Level::Info;
}

Level& threshold_ref() {
    static Level level = parse_level(std::getenv("OCULOLIPID_LOG"));
    return level;
}

const char* tag(Level level) {
    switch (level) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        default: return "error";
    }
}

} // namespace

Level threshold() { return threshold_ref(); }
void set_threshold(Level level) { threshold_ref() = level; }

void write(Level level, const std::string& message) {
    if (level < threshold()) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[" << tag(level) << "] " << message << "\n";
}

} // namespace oculolipid::log
