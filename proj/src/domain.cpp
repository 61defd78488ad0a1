#include "permesh/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "permesh/error.hpp"

namespace permesh {

namespace {

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::size_t label_count(std::string_view host) {
    return static_cast<std::size_t>(std::count(host.begin(), host.end(), '.')) + 1;
}

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::ranges::transform(out, out.begin(), lower);
    return out;
}

bool is_valid_hostname(std::string_view host) {
    if (host.empty() || host.size() > 253) {
        return false;
    }
    std::size_t label_len = 0;
    for (char c : host) {
        if (c == '.') {
            if (label_len == 0) {
                return false;
            }
            label_len = 0;
            continue;
        }
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
        if (!ok || ++label_len > 63) {
            return false;
        }
    }
    return label_len != 0;
}

DomainPattern DomainPattern::parse(std::string_view raw) {
    DomainPattern p;
    p.raw_ = std::string(raw);
    p.normalized_ = to_lower(raw);

    std::string_view body = p.normalized_;
    if (body.starts_with("*.")) {
        p.wildcard_ = true;
        body.remove_prefix(2);
    }
    if (body.find('*') != std::string_view::npos) {
        throw Error(Errc::malformed_pattern,
                    "'" + p.raw_ + "': a wildcard may only appear as the entire leftmost label");
    }
    if (!is_valid_hostname(body)) {
        throw Error(Errc::malformed_pattern, "'" + p.raw_ + "': not a valid hostname");
    }
    if (label_count(body) < 2) {
        throw Error(Errc::malformed_pattern, "'" + p.raw_ + "': base domain needs at least two labels");
    }
    if (Ipv4::parse(body)) {
        throw Error(Errc::malformed_pattern, "'" + p.raw_ + "': IP literals are not domain patterns");
    }
    p.base_ = std::string(body);
    return p;
}

bool match_domain(const DomainPattern& pattern, std::string_view host) {
    const std::string_view base = pattern.base();
    if (iequals(host, base)) {
        return true;
    }
    if (!pattern.is_wildcard() || host.size() <= base.size() + 1) {
        return false;
    }
    const std::size_t cut = host.size() - base.size();
    return host[cut - 1] == '.' && iequals(host.substr(cut), base);
}

bool match_any(std::span<const DomainPattern> patterns, std::string_view host) {
    return std::ranges::any_of(patterns, [&](const DomainPattern& p) { return match_domain(p, host); });
}

std::optional<Ipv4> Ipv4::parse(std::string_view dotted) {
    Ipv4 ip;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i > 0) {
            if (pos >= dotted.size() || dotted[pos] != '.') {
                return std::nullopt;
            }
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < dotted.size() && dotted[pos] >= '0' && dotted[pos] <= '9') {
            ++pos;
        }
        const std::size_t len = pos - start;
        if (len == 0 || len > 3 || (len > 1 && dotted[start] == '0')) {
            return std::nullopt;
        }
        unsigned value = 0;
        std::from_chars(dotted.data() + start, dotted.data() + pos, value);
        if (value > 255) {
            return std::nullopt;
        }
        ip.octets[i] = static_cast<std::uint8_t>(value);
    }
    if (pos != dotted.size()) {
        return std::nullopt;
    }
    return ip;
}

std::string Ipv4::to_string() const {
    return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." + std::to_string(octets[2]) + "." +
           std::to_string(octets[3]);
}

}  // namespace permesh
