#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace permesh {

std::string to_lower(std::string_view s);

// Letters, digits, '-' and '_' in dot-separated non-empty labels. Callers
// lowercase first; uppercase input is rejected.
bool is_valid_hostname(std::string_view host);

// A hostname allowlist entry: either an exact hostname or "*." + base domain.
// "*.d" covers d itself as well as every label-boundary subdomain of d.
class DomainPattern {
public:
    // Throws Error(malformed_pattern).
    static DomainPattern parse(std::string_view raw);

    const std::string& raw() const noexcept { return raw_; }
    const std::string& normalized() const noexcept { return normalized_; }
    bool is_wildcard() const noexcept { return wildcard_; }
    // Pattern without the leading "*." (equal to normalized() for exact patterns).
    const std::string& base() const noexcept { return base_; }

    friend bool operator==(const DomainPattern& a, const DomainPattern& b) {
        return a.normalized_ == b.normalized_;
    }

private:
    std::string raw_;
    std::string normalized_;
    std::string base_;
    bool wildcard_ = false;
};

bool match_domain(const DomainPattern& pattern, std::string_view host);
bool match_any(std::span<const DomainPattern> patterns, std::string_view host);

struct Ipv4 {
    std::array<std::uint8_t, 4> octets{};

    static std::optional<Ipv4> parse(std::string_view dotted);
    std::string to_string() const;

    friend bool operator==(const Ipv4&, const Ipv4&) = default;
    friend auto operator<=>(const Ipv4&, const Ipv4&) = default;
};

}  // namespace permesh
