#include "fbf/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fbf {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
    return out;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size();
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& p) : std::invalid_argument(join(p)), problems(p) {}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::vector<std::string> problems;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        std::ostringstream where;
        where << origin << ":" << lineno << ": ";
        if (eq == std::string::npos) {
            problems.push_back(where.str() + "expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
            problems.push_back(where.str() + "invalid key '" + key + "'");
            continue;
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (cfg.values_.count(key)) {
            problems.push_back(where.str() + "duplicate key '" + key + "'");
            continue;
        }
        cfg.values_[key] = value;
    }
    if (!problems.empty()) throw ConfigError(problems);
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError({"cannot read config file '" + path + "'"});
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

const std::string& ConfigFile::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::out_of_range("config: missing key '" + key + "'");
    touch(key);
    return it->second;
}

std::vector<std::string> ConfigFile::keys() const {
    std::vector<std::string> k;
    for (const auto& [key, v] : values_) k.push_back(key);
    return k;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback,
                                   std::vector<std::string>&) const {
    return has(key) ? raw(key) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback, std::vector<std::string>& problems) const {
    if (!has(key)) return fallback;
    double v = 0.0;
    if (!parse_number(raw(key), v)) {
        problems.push_back(key + ": expected a number, got '" + raw(key) + "'");
        return fallback;
    }
    return v;
}

long long ConfigFile::get_int(const std::string& key, long long fallback, std::vector<std::string>& problems) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || errno != 0 || end != s.c_str() + s.size()) {
        problems.push_back(key + ": expected an integer, got '" + s + "'");
        return fallback;
    }
    return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback, std::vector<std::string>& problems) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    problems.push_back(key + ": expected true/false, got '" + s + "'");
    return fallback;
}

std::vector<double> ConfigFile::get_array(const std::string& key, const std::vector<double>& fallback,
                                          std::vector<std::string>& problems) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
        problems.push_back(key + ": expected a bracketed list, got '" + s + "'");
        return fallback;
    }
    std::vector<double> out;
    const std::string body = trim(s.substr(1, s.size() - 2));
    if (body.empty()) return out;
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
        double v = 0.0;
        if (!parse_number(trim(item), v)) {
            problems.push_back(key + ": bad list entry '" + trim(item) + "'");
            return fallback;
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> ConfigFile::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, v] : values_)
        if (!used_.count(key)) out.push_back(key);
    return out;
}

}  // namespace fbf
