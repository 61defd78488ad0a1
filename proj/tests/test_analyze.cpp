#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "permesh/analyze.hpp"
#include "permesh/catalog.hpp"
#include "permesh/error.hpp"

using namespace permesh;
namespace cat = permesh::catalog;

namespace {

const std::string kRoot = PERMESH_SOURCE_DIR;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Analyze, GoldenWeatherLegacy) {
    AnalyzeOptions o;
    o.domains = {"weather.example.com"};
    const Analysis a = analyze_manifest(load_manifest_file(kRoot + "/manifests/weather-legacy.json"), o);
    EXPECT_EQ(a.to_text(), slurp(kRoot + "/tests/data/analyze-weather-legacy.txt"));
}

TEST(Analyze, GoldenAnalytics) {
    const Analysis a = analyze_manifest(load_manifest_file(kRoot + "/manifests/analytics.json"));
    EXPECT_EQ(a.to_text(), slurp(kRoot + "/tests/data/analyze-analytics.txt"));
    EXPECT_EQ(a.subject.prompt, std::vector<std::string>{"collect usage statistics"});
    EXPECT_EQ(a.subject.footprint.size(), 2u);
    EXPECT_FALSE(a.comparison.has_value());
}

TEST(Analyze, GoldenGalleryLegacy) {
    const Analysis a = analyze_manifest(load_manifest_file(kRoot + "/manifests/gallery-legacy.json"));
    EXPECT_EQ(a.to_text(), slurp(kRoot + "/tests/data/analyze-gallery-legacy.txt"));
}

TEST(Analyze, LegacyDiffDropsUnrestrictedInternet) {
    AnalyzeOptions o;
    o.domains = {"weather.example.com"};
    const Analysis a = analyze_manifest(load_manifest_file(kRoot + "/manifests/weather-legacy.json"), o);
    ASSERT_TRUE(a.comparison);
    EXPECT_TRUE(a.comparison->derived);
    const Footprint removed{{std::string(cat::kInternet), std::nullopt}};
    const Footprint added{{std::string(cat::kInternet), ParamValues{"weather.example.com"}}};
    EXPECT_EQ(a.comparison->footprint_removed, removed);
    EXPECT_EQ(a.comparison->footprint_added, added);
    EXPECT_EQ(a.comparison->prompt_removed, std::vector<std::string>{"full access to the Internet"});
}

TEST(Analyze, ExplicitCounterpart) {
    AnalyzeOptions o;
    o.compare = load_manifest_file(kRoot + "/manifests/weather-proxied.json");
    const Analysis a = analyze_manifest(load_manifest_file(kRoot + "/manifests/weather-legacy.json"), o);
    ASSERT_TRUE(a.comparison);
    EXPECT_FALSE(a.comparison->derived);
    const nlohmann::json j = a.to_json();
    EXPECT_TRUE(j.contains("comparison"));
}

TEST(Analyze, ProxiedEquivalentWithoutDomainsUsesPlaceholder) {
    const AppManifest legacy = load_manifest_file(kRoot + "/manifests/weather-legacy.json");
    const AppManifest m = proxied_equivalent(legacy, {});
    ASSERT_EQ(m.permissions.size(), 1u);
    EXPECT_EQ(m.permissions[0].id, cat::kDomainSelective);
    EXPECT_FALSE(m.legacy);
}

TEST(Analyze, UnknownPermission) {
    try {
        analyze_manifest(load_manifest_file(kRoot + "/tests/data/unknown-permission.json"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::unknown_permission);
    }
}

TEST(Analyze, EveryBundledManifestAnalyzes) {
    for (const char* name : {"weather-legacy", "weather-proxied", "analytics", "voip", "camera", "gallery-legacy",
                             "bank-proxied", "news-legacy"}) {
        EXPECT_NO_THROW(analyze_manifest(load_manifest_file(kRoot + "/manifests/" + name + ".json"))) << name;
    }
}
