#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqdyn/core.hpp"

namespace seqdyn {

/// Parsed INI-style experiment description: [section] headers, key = value
/// lines, '#'/';' comments.  Values stay strings; typed access and key
/// validation happen against a preset's declared schema.
class experiment_config {
public:
    using section_map = std::map<std::string, std::map<std::string, std::string>>;

    static experiment_config parse(const std::string& text) {
        experiment_config cfg;
        std::istringstream in(text);
        std::string line, section;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                require(s.back() == ']' && s.size() > 2, errc::config_parse,
                        "config line " + std::to_string(lineno) + ": malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                require(!cfg.sections_.count(section), errc::config_parse,
                        "config: duplicate section [" + section + "]");
                cfg.sections_[section];
                continue;
            }
            auto eq = s.find('=');
            require(eq != std::string::npos, errc::config_parse,
                    "config line " + std::to_string(lineno) + ": expected key = value");
            require(!section.empty(), errc::config_parse,
                    "config line " + std::to_string(lineno) + ": key outside any section");
            std::string key = trim(s.substr(0, eq));
            std::string val = trim(s.substr(eq + 1));
            require(!key.empty() && !val.empty(), errc::config_parse,
                    "config line " + std::to_string(lineno) + ": empty key or value");
            auto [it, fresh] = cfg.sections_[section].emplace(key, val);
            (void)it;
            require(fresh, errc::config_parse,
                    "config: duplicate key '" + key + "' in [" + section + "]");
        }
        return cfg;
    }

    const section_map& sections() const { return sections_; }

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    long get_long(const std::string& section, const std::string& key, long fallback) const {
        if (!has(section, key)) return fallback;
        return parse_long(raw(section, key), section, key);
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        const std::string& v = raw(section, key);
        try {
            std::size_t pos = 0;
            std::uint64_t r = std::stoull(v, &pos);
            require(pos == v.size(), errc::config_parse, "");
            return r;
        } catch (...) {
            fail(errc::config_parse, "config: [" + section + "] " + key +
                                         " = '" + v + "' is not an unsigned integer");
        }
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        if (!has(section, key)) return fallback;
        const std::string& v = raw(section, key);
        try {
            std::size_t pos = 0;
            double r = std::stod(v, &pos);
            require(pos == v.size(), errc::config_parse, "");
            return r;
        } catch (...) {
            fail(errc::config_parse,
                 "config: [" + section + "] " + key + " = '" + v + "' is not a number");
        }
    }

    /// Comma-separated list of reals.
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<double> out;
        for (const std::string& piece : split(raw(section, key))) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(piece, &pos));
                require(pos == piece.size(), errc::config_parse, "");
            } catch (...) {
                fail(errc::config_parse, "config: [" + section + "] " + key +
                                             ": '" + piece + "' is not a number");
            }
        }
        require(!out.empty(), errc::config_parse,
                "config: [" + section + "] " + key + ": empty list");
        return out;
    }

    std::vector<long> get_longs(const std::string& section, const std::string& key,
                                std::vector<long> fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<long> out;
        for (const std::string& piece : split(raw(section, key)))
            out.push_back(parse_long(piece, section, key));
        require(!out.empty(), errc::config_parse,
                "config: [" + section + "] " + key + ": empty list");
        return out;
    }

    /// Rejects any section or key not present in the schema.  Schema entries
    /// have the form "section.key".
    void validate(const std::set<std::string>& allowed) const {
        for (const auto& [section, keys] : sections_) {
            bool section_known =
                std::any_of(allowed.begin(), allowed.end(), [&](const std::string& a) {
                    return a.rfind(section + ".", 0) == 0;
                });
            require(section_known, errc::config_parse,
                    "config: unknown section [" + section + "]");
            for (const auto& [key, value] : keys) {
                (void)value;
                require(allowed.count(section + "." + key) > 0, errc::config_parse,
                        "config: unknown key '" + key + "' in [" + section + "]");
            }
        }
    }

    /// Canonical serialization (sorted sections and keys) for hashing.
    std::string canonical() const {
        std::string out;
        for (const auto& [section, keys] : sections_) {
            out += "[" + section + "]\n";
            for (const auto& [key, value] : keys) out += key + "=" + value + "\n";
        }
        return out;
    }

private:
    section_map sections_;

    const std::string& raw(const std::string& section, const std::string& key) const {
        return sections_.at(section).at(key);
    }

    static std::string strip_comment(const std::string& line) {
        auto pos = line.find_first_of("#;");
        return pos == std::string::npos ? line : line.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(trim(cur));
        return out;
    }

    static long parse_long(const std::string& v, const std::string& section,
                           const std::string& key) {
        try {
            std::size_t pos = 0;
            long r = std::stol(v, &pos);
            require(pos == v.size(), errc::config_parse, "");
            return r;
        } catch (...) {
            fail(errc::config_parse,
                 "config: [" + section + "] " + key + " = '" + v + "' is not an integer");
        }
    }
};

} // namespace seqdyn
