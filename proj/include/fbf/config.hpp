#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbf {

/// Configuration problem; what() lists every problem found, one per line.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::vector<std::string>& problems);
    std::vector<std::string> problems;
};

/**
 * @brief Flat `section.key = value` file.
 *
 * `#` starts a comment, arrays are bracketed comma lists (`[1, 2.5, 3]`),
 * strings may be double-quoted. Duplicate keys are an error.
 */
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::string& raw(const std::string& key) const;
    std::vector<std::string> keys() const;
    const std::string& origin() const { return origin_; }

    // Typed accessors record failures in `problems` and return the fallback.
    std::string get_string(const std::string& key, const std::string& fallback,
                           std::vector<std::string>& problems) const;
    double get_double(const std::string& key, double fallback, std::vector<std::string>& problems) const;
    long long get_int(const std::string& key, long long fallback, std::vector<std::string>& problems) const;
    bool get_bool(const std::string& key, bool fallback, std::vector<std::string>& problems) const;
    std::vector<double> get_array(const std::string& key, const std::vector<double>& fallback,
                                  std::vector<std::string>& problems) const;

    /// Keys never read through a typed accessor.
    std::vector<std::string> unused_keys() const;

private:
    void touch(const std::string& key) const { used_.insert(key); }

    std::string origin_;
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace fbf
