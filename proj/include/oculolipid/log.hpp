#pragma once

#include <sstream>
#include <string>

namespace oculolipid::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Threshold comes from OCULOLIPID_LOG (debug|info|warn|error|off), default info.
Level threshold();
void set_threshold(Level level);
void write(Level level, const std::string& message);

namespace detail {
template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}
} // namespace detail

template <typename... Args>
void debug(Args&&... args) { write(Level::Debug, detail::concat(std::forward<Args>(args)...)); }
template <typename... Args>
void info(Args&&... args) { write(Level::Info, detail::concat(std::forward<Args>(args)...)); }
template <typename... Args>
void warn(Args&&... args) { write(Level::Warn, detail::concat(std::forward<Args>(args)...)); }
template <typename... Args>
void error(Args&&... args) { write(Level::Error, detail::concat(std::forward<Args>(args)...)); }

} // namespace oculolipid::log
