#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "regkit/common.hpp"

namespace regkit {

// Line-oriented key-value text with [section] headers. Shared grammar for
// schema files and experiment configs:
//
//   # comment (also ;)
//   [section-name]
//   key = value        value runs to end of line, trimmed
//
// Section and key order is preserved; duplicate keys within a section are
// kept in file order.
struct KvSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* get(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

}  // namespace detail

inline std::vector<KvSection> parse_kv_text(const std::string& text, const std::string& origin) {
    std::vector<KvSection> sections;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw Error(origin + ": unterminated section header at line " + std::to_string(lineno));
            sections.push_back({detail::trim(t.substr(1, t.size() - 2)), {}});
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(origin + ": expected 'key = value' at line " + std::to_string(lineno));
        if (sections.empty())
            throw Error(origin + ": entry before any [section] at line " + std::to_string(lineno));
        sections.back().entries.emplace_back(detail::trim(t.substr(0, eq)),
                                             detail::trim(t.substr(eq + 1)));
    }
    return sections;
}

inline std::vector<KvSection> load_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str(), path);
}

}  // namespace regkit
