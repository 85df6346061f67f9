#include "qstab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace qstab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

KeyValues::Value parse_scalar(const std::string& tok, int line_no) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return tok.substr(1, tok.size() - 2);
    if (tok == "true") return true;
    if (tok == "false") return false;
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
    } catch (...) {
    }
    throw io_error("config line " + std::to_string(line_no) + ": bad value '" + tok + "'");
}

} // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw io_error("config line " + std::to_string(line_no) + ": empty key or value");
        if (val.front() == '[') {
            if (val.back() != ']')
                throw io_error("config line " + std::to_string(line_no) + ": unclosed list");
            std::string inner = val.substr(1, val.size() - 2);
            std::vector<double> nums;
            std::vector<std::string> strs;
            bool any_str = false;
            std::stringstream items(inner);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                Value v = parse_scalar(item, line_no);
                if (std::holds_alternative<double>(v)) {
                    nums.push_back(std::get<double>(v));
                } else if (std::holds_alternative<std::string>(v)) {
                    any_str = true;
                    strs.push_back(std::get<std::string>(v));
                } else {
                    throw io_error("config line " + std::to_string(line_no) +
                                   ": lists hold numbers or strings");
                }
            }
            if (any_str && !nums.empty())
                throw io_error("config line " + std::to_string(line_no) + ": mixed list");
            if (any_str)
                kv.entries[key] = strs;
            else
                kv.entries[key] = nums;
        } else {
            kv.entries[key] = parse_scalar(val, line_no);
        }
    }
    return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

double KeyValues::get_number(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw io_error("config: missing key '" + key + "'");
    if (!std::holds_alternative<double>(it->second))
        throw io_error("config: key '" + key + "' is not a number");
    return std::get<double>(it->second);
}

double KeyValues::get_number(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    if (!std::holds_alternative<bool>(it->second))
        throw io_error("config: key '" + key + "' is not a boolean");
    return std::get<bool>(it->second);
}

std::string KeyValues::get_string(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw io_error("config: missing key '" + key + "'");
    if (!std::holds_alternative<std::string>(it->second))
        throw io_error("config: key '" + key + "' is not a string");
    return std::get<std::string>(it->second);
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> KeyValues::get_numbers(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw io_error("config: missing key '" + key + "'");
    if (std::holds_alternative<std::vector<double>>(it->second))
        return std::get<std::vector<double>>(it->second);
    if (std::holds_alternative<double>(it->second))
        return {std::get<double>(it->second)};
    throw io_error("config: key '" + key + "' is not a number list");
}

std::vector<std::string> KeyValues::get_strings(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw io_error("config: missing key '" + key + "'");
    if (std::holds_alternative<std::vector<std::string>>(it->second))
        return std::get<std::vector<std::string>>(it->second);
    if (std::holds_alternative<std::string>(it->second))
        return {std::get<std::string>(it->second)};
    throw io_error("config: key '" + key + "' is not a string list");
}

} // namespace qstab
