#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "parreg/errors.hpp"
#include "parreg/rational.hpp"

namespace parreg {

/// Flat key/value experiment configuration. Keys are dotted paths, values are
/// typed scalars or comma-separated lists; '#' starts a comment. Rationals are
/// written as "4" or "4/3" (never as decimals) so exponent arithmetic stays
/// exact end to end.
class Config {
public:
    static Config from_text(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty() || !valid_key(key))
                throw ConfigError("line " + std::to_string(lineno) + ": bad key '" + key + "'");
            if (cfg.kv_.count(key))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                                  "'");
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str());
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return kv_; }

    std::string get_string(const std::string& key, const std::string& def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : parse_double(key, it->second);
    }

    long get_int(const std::string& key, long def) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t pos = 0;
            const long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': expected an integer, got '" + it->second + "'");
        }
    }

    bool get_bool(const std::string& key, bool def) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw ConfigError("key '" + key + "': expected true or false, got '" + it->second + "'");
    }

    Rat get_rat(const std::string& key, const Rat& def) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? def : parse_rat(key, it->second);
    }

    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> def = {}) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<double> out;
        for (const auto& tok : split(it->second)) out.push_back(parse_double(key, tok));
        return out;
    }

    std::vector<long> get_int_list(const std::string& key, std::vector<long> def = {}) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<long> out;
        for (const auto& tok : split(it->second)) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stol(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ConfigError("key '" + key + "': expected integers, got '" + tok + "'");
            }
        }
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> def = {}) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        return split(it->second);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, ',')) {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        auto b = s.begin(), e = s.end();
        while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
        while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
        return {b, e};
    }

    static bool valid_key(const std::string& k) {
        return std::all_of(k.begin(), k.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_';
        });
    }

    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
        }
    }

    static Rat parse_rat(const std::string& key, const std::string& v) {
        const auto slash = v.find('/');
        try {
            if (slash == std::string::npos) {
                std::size_t pos = 0;
                const long long n = std::stoll(v, &pos);
                if (pos != v.size()) throw std::invalid_argument("");
                return Rat(n);
            }
            std::size_t p1 = 0, p2 = 0;
            const std::string num = trim(v.substr(0, slash)), den = trim(v.substr(slash + 1));
            const long long n = std::stoll(num, &p1);
            const long long d = std::stoll(den, &p2);
            if (p1 != num.size() || p2 != den.size() || d == 0) throw std::invalid_argument("");
            return Rat(n, d);
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': expected a rational like 4 or 4/3, got '" + v +
                              "'");
        }
    }

    std::map<std::string, std::string> kv_;
};

} // namespace parreg
