#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "permesh/domain.hpp"
#include "permesh/error.hpp"

using permesh::DomainPattern;
using permesh::match_domain;

namespace {

struct Row {
    const char* pattern;
    const char* host;
    bool expected;
};

const Row kTable[] = {
    {"*.bbc.co.uk", "news.bbc.co.uk", true},
    {"*.bbc.co.uk", "bbc.co.uk", true},
    {"*.bbc.co.uk", "evilbbc.co.uk", false},
    {"*.google-analytics.com", "ssl.google-analytics.com", true},
    {"*.bbc.co.uk", "a.b.bbc.co.uk", true},
    {"*.bbc.co.uk", "bbc.co.uk.evil.com", false},
    {"*.bbc.co.uk", "co.uk", false},
    {"news.bbc.co.uk", "news.bbc.co.uk", true},
    {"news.bbc.co.uk", "www.news.bbc.co.uk", false},
    {"news.bbc.co.uk", "bbc.co.uk", false},
    {"*.BBC.co.uk", "News.BBC.CO.UK", true},
    {"weather.example.com", "WEATHER.example.com", true},
};

}  // namespace

TEST(DomainMatch, FixedTable) {
    for (const Row& r : kTable) {
        EXPECT_EQ(match_domain(DomainPattern::parse(r.pattern), r.host), r.expected) << r.pattern << " vs " << r.host;
        EXPECT_EQ(oracle::domain_matches(r.pattern, r.host), r.expected) << r.pattern << " vs " << r.host;
    }
}

TEST(DomainMatch, AgreesWithOracleOnRandomPairs) {
    std::mt19937 rng(20120601);
    const std::vector<std::string> labels{"a", "b", "bbc", "co", "uk", "com", "evil", "ab", "ba", "x-y", "Bbc", "CO"};
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    auto name = [&](std::size_t min_labels) {
        const std::size_t n = min_labels + pick(4);
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out += '.';
            out += labels[pick(labels.size())];
        }
        return out;
    };

    int disagreements = 0;
    for (int i = 0; i < 10000; ++i) {
        const bool wildcard = pick(2) == 1;
        const std::string base = name(2);
        const std::string pattern = wildcard ? "*." + base : base;
        std::string host;
        switch (pick(4)) {
            case 0: host = name(1); break;
            case 1: host = name(1) + "." + base; break;
            case 2: host = base; break;
            default: host = labels[pick(labels.size())] + base; break;  // glued, no label break
        }
        if (match_domain(DomainPattern::parse(pattern), host) != oracle::domain_matches(pattern, host)) {
            ++disagreements;
            ADD_FAILURE() << pattern << " vs " << host;
            if (disagreements > 5) break;
        }
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(DomainPattern, RejectsMalformed) {
    for (const char* bad : {"", "*", "*.", "*.*.com", "a..b", "foo.*.com", "10.0.0.1", "*.10.0.0.1", "has space.com",
                            ".leading.com"}) {
        EXPECT_THROW(DomainPattern::parse(bad), permesh::Error) << '"' << bad << '"';
    }
}

TEST(DomainPattern, NormalizesCase) {
    const DomainPattern p = DomainPattern::parse("*.BBC.co.uk");
    EXPECT_TRUE(p.is_wildcard());
    EXPECT_EQ(p.normalized(), "*.bbc.co.uk");
    EXPECT_EQ(p.base(), "bbc.co.uk");
    EXPECT_EQ(p, DomainPattern::parse("*.bbc.co.uk"));
}

TEST(Ipv4, ParsesDottedQuads) {
    EXPECT_EQ(permesh::Ipv4::parse("10.0.0.1")->to_string(), "10.0.0.1");
    EXPECT_EQ(permesh::Ipv4::parse("255.255.255.255")->to_string(), "255.255.255.255");
    for (const char* bad : {"", "10.0.0", "10.0.0.256", "1.2.3.4.5", "a.b.c.d", "1..2.3", "01.2.3.4x"}) {
        EXPECT_FALSE(permesh::Ipv4::parse(bad).has_value()) << bad;
    }
}
