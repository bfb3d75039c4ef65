// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "quanta/error.hpp"

namespace quanta {

/// Strict "key = value" text config: '#' starts a comment, keys may not repeat,
/// and every key must be consumed by the reader before check_all_consumed() —
/// unknown keys are rejected, not ignored.
class ConfigReader {
public:
    static ConfigReader from_string(const std::string& text, const std::string& origin = "<string>") {
        ConfigReader r;
        r.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw IoError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw IoError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (r.values_.count(key))
                throw IoError(origin + ": duplicate key '" + key + "'");
            r.values_[key] = value;
        }
        return r;
    }

    static ConfigReader from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw IoError(origin_ + ": missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::string get_string_or(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return get_string(key);
    }

    std::uint64_t get_u64(const std::string& key) { return parse_u64(key, get_string(key)); }

    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        return get_u64(key);
    }

    double get_double(const std::string& key) { return parse_double(key, get_string(key)); }

    double get_double_or(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return get_double(key);
    }

    std::vector<std::size_t> get_size_list(const std::string& key) {
        const std::string raw = get_string(key);
        std::vector<std::size_t> out;
        std::istringstream in(raw);
        std::string item;
        while (std::getline(in, item, ','))
            out.push_back(static_cast<std::size_t>(parse_u64(key, trim(item))));
        if (out.empty()) throw IoError(origin_ + ": empty list for key '" + key + "'");
        return out;
    }

    void check_all_consumed() const {
        for (const auto& [key, value] : values_)
            if (!used_.count(key))
                throw IoError(origin_ + ": unknown key '" + key + "'");
    }

private:
    static std::string trim(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    std::uint64_t parse_u64(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw IoError(origin_ + ": key '" + key + "' is not an integer: '" + raw + "'");
        }
    }

    double parse_double(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw IoError(origin_ + ": key '" + key + "' is not a number: '" + raw + "'");
        }
    }

    std::string origin_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

}  // namespace quanta
