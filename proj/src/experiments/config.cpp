#include "experiments/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polaron {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: unterminated section at line " +
                                         std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value at line " +
                                     std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
        cfg.entries[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    std::string current;
    for (const auto& [key, value] : entries) {
        const auto dot = key.find('.');
        const std::string section = (dot == std::string::npos) ? "" : key.substr(0, dot);
        const std::string name = (dot == std::string::npos) ? key : key.substr(dot + 1);
        if (section != current) {
            out += "[" + section + "]\n";
            current = section;
        }
        out += name + " = " + value + "\n";
    }
    return out;
}

std::string ExperimentConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second;
}

double ExperimentConfig::get_num(const std::string& key, double fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    return std::stod(it->second);
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    return std::stoi(it->second);
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
    std::vector<double> out;
    auto it = entries.find(key);
    if (it == entries.end()) return out;
    std::istringstream is(it->second);
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

}  // namespace polaron
