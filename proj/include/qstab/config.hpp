#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "qstab/common.hpp"

namespace qstab {

// Minimal key = value document: one assignment per line, `#` comments,
// values are numbers, booleans, quoted strings, or [a, b, ...] lists.
//   family = "gamma"
//   s = 1.0
//   directions = ["cubic", "bump_left"]
struct KeyValues {
    using Value = std::variant<double, bool, std::string, std::vector<double>,
                               std::vector<std::string>>;
    std::map<std::string, Value> entries;

    bool has(const std::string& key) const { return entries.count(key) != 0; }

    double get_number(const std::string& key) const;
    double get_number(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_numbers(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    static KeyValues parse(const std::string& text);
    static KeyValues parse_file(const std::string& path);
};

} // namespace qstab
