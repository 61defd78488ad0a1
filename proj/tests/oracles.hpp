#pragma once

// Reference implementations used only by tests. Written independently of
// the library code they check.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Exact equality, apex equality, or a suffix that starts with a dot.
inline bool domain_matches(const std::string& pattern, const std::string& host) {
    const std::string p = lower(pattern);
    const std::string h = lower(host);
    if (p.rfind("*.", 0) != 0) return p == h;
    const std::string base = p.substr(2);
    if (h == base) return true;
    const std::string suffix = "." + base;
    return h.size() > suffix.size() && h.compare(h.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Lexical normalization of root + "/" + rel. nullopt means the result is not
// under root or the input is rejected.
inline std::optional<std::string> normalize_under(const std::string& root, const std::string& rel) {
    if (rel.empty() || rel.find('\0') != std::string::npos) return std::nullopt;
    std::string joined;
    if (rel[0] == '/') {
        if (rel != root && rel.rfind(root + "/", 0) != 0) return std::nullopt;
        joined = rel;
    } else {
        joined = root + "/" + rel;
    }
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i <= joined.size()) {
        std::size_t j = joined.find('/', i);
        if (j == std::string::npos) j = joined.size();
        const std::string seg = joined.substr(i, j - i);
        if (seg == "..") {
            if (parts.empty()) return std::nullopt;
            parts.pop_back();
        } else if (!seg.empty() && seg != ".") {
            parts.push_back(seg);
        }
        i = j + 1;
    }
    std::string out;
    for (const std::string& s : parts) out += "/" + s;
    if (out != root && out.rfind(root + "/", 0) != 0) return std::nullopt;
    return out;
}

// Brute-force reachability over a requires-graph, including `start`.
inline std::set<std::string> reachable(const std::map<std::string, std::vector<std::string>>& edges,
                                       const std::string& start) {
    std::set<std::string> seen{start};
    std::vector<std::string> frontier{start};
    while (!frontier.empty()) {
        const std::string n = frontier.back();
        frontier.pop_back();
        auto it = edges.find(n);
        if (it == edges.end()) continue;
        for (const std::string& m : it->second) {
            if (seen.insert(m).second) frontier.push_back(m);
        }
    }
    return seen;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace oracle
