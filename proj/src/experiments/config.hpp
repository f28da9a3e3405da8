// config.hpp — plain-text experiment configuration: `key = value` lines under
// [section] headers, exposed as "section.key" entries.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace polaron {

struct ExperimentConfig {
    std::map<std::string, std::string> entries;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback = "") const;
    double get_num(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key) const;  // whitespace separated

    void set(const std::string& key, const std::string& value) { entries[key] = value; }
};

}  // namespace polaron
