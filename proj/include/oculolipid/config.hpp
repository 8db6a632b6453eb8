#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oculolipid {

// Flat key=value configuration. Lines starting with '#' are comments.
// Later assignments win, so CLI flag overrides can be applied by re-setting keys.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::optional<std::string> get_optional(const std::string& key) const;

    // Deterministic (sorted) view of every key for manifest snapshots.
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string lower(const std::string& s);

} // namespace oculolipid
