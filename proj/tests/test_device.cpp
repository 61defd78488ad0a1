#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "permesh/catalog.hpp"
#include "permesh/device.hpp"
#include "permesh/error.hpp"

using namespace permesh;
namespace cat = permesh::catalog;

namespace {

std::string s(std::string_view v) { return std::string(v); }

// An app holding only `permission`, with whatever parameters it needs.
AppManifest only(const Device& d, const std::string& package, const std::string& permission) {
    PermissionRequest req{permission, std::nullopt};
    const Permission& p = d.registry().get(permission);
    if (p.schema && p.schema->kind == ParamKind::domain_patterns) req.params = ParamValues{"*.example.com"};
    return {package, {req}, {}, false};
}

}  // namespace

// Every stock proxy, every native API in its footprint: an app granted only
// the proxy's permission is denied the native API.
TEST(Hermeticity, ExhaustiveMatrix) {
    const auto start = std::chrono::steady_clock::now();
    Device d;
    std::size_t checks = 0;
    std::size_t violations = 0;
    int n = 0;
    for (const auto& proxy : d.store().available()) {
        const std::string pkg = "com.example.h" + std::to_string(n++);
        ASSERT_TRUE(d.install(only(d, pkg, proxy->exposes.id)).installed) << proxy->id;
        for (const NativeGrant& g : d.footprint(pkg)) {
            for (const std::string& op : d.registry().native_apis(g.permission)) {
                ++checks;
                if (d.authorize_call(pkg, op) != CallVerdict::deny) {
                    ++violations;
                    ADD_FAILURE() << pkg << " reached " << op;
                }
            }
        }
        // And the proxy's own surface is open.
        for (const std::string& op : proxy->api) EXPECT_EQ(d.authorize_call(pkg, op), CallVerdict::allow);
    }
    EXPECT_EQ(violations, 0u);
    EXPECT_GE(checks, 8u);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Install, ProxiesInstalledFirst) {
    Device d;
    const InstallResult r = d.install({"com.example.notes", {{s(cat::kCollectUsageStats), std::nullopt}}, {}, false});
    ASSERT_TRUE(r.installed);
    ASSERT_EQ(r.proxies_installed.size(), 2u);
    EXPECT_TRUE(d.store().is_installed(cat::kDomainSelectiveProxy));
    const AppInstance* proxy = d.app(cat::kDomainSelectiveProxy);
    ASSERT_NE(proxy, nullptr);
    EXPECT_TRUE(proxy->is_proxy);
    EXPECT_TRUE(proxy->holds(cat::kInternet));
}

TEST(Install, RejectedProxyAbortsTheApp) {
    Device d;
    const AppManifest m{"com.example.notes", {{s(cat::kCollectUsageStats), std::nullopt}}, {}, false};
    try {
        d.install(m, GrantDecision::accept_all, {{s(cat::kUsageStatsProxy), GrantDecision::reject}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::grant_rejected);
    }
    EXPECT_EQ(d.app("com.example.notes"), nullptr);
    EXPECT_FALSE(d.store().is_installed(cat::kUsageStatsProxy));
}

TEST(Install, UserRejectsApp) {
    Device d;
    const InstallResult r = d.install({"com.example.weather", {{s(cat::kInternet), std::nullopt}}, {}, true},
                                      GrantDecision::reject);
    EXPECT_FALSE(r.installed);
    EXPECT_EQ(d.app("com.example.weather"), nullptr);
}

TEST(Install, GrantsNeverGrow) {
    Device d;
    d.install({"com.example.news", {{s(cat::kDomainSelective), ParamValues{"*.bbc.co.uk"}}}, {}, false});
    const std::vector<Grant> before = d.app("com.example.news")->grants;
    d.dns().add_record("news.bbc.co.uk", *Ipv4::parse("10.0.0.1"));
    d.http_request("com.example.news", HttpMethod::get, "http://news.bbc.co.uk/");
    d.http_request("com.example.news", HttpMethod::get, "http://other.example.com/");
    d.fs_access("com.example.news", "x", FsOp::write, "x");
    d.report_stat("com.example.news", "e");
    d.incoming_call("com.example.news");
    d.install({"com.example.notes", {{s(cat::kCollectUsageStats), std::nullopt}}, {}, false});
    EXPECT_EQ(d.app("com.example.news")->grants, before);
    EXPECT_THROW(d.install({"com.example.news", {{s(cat::kInternet), std::nullopt}}, {}, true}), Error);
    EXPECT_EQ(d.app("com.example.news")->grants, before);
}

TEST(Storage, ProxiedAppIsConfined) {
    Device d;
    d.fs().write("/sdcard/DCIM/img.jpg", "jpeg");
    d.install({"com.example.weather", {{s(cat::kSelectiveSdcard), std::nullopt}}, {}, false});
    const FsOutcome w = d.fs_access("com.example.weather", "cfg/settings.ini", FsOp::write, "units=metric");
    EXPECT_EQ(w.status, FsStatus::ok);
    EXPECT_EQ(w.path, sandbox_root("com.example.weather") + "/cfg/settings.ini");
    EXPECT_TRUE(d.fs().exists(w.path));
    EXPECT_EQ(d.fs_access("com.example.weather", "cfg/settings.ini", FsOp::read).data, "units=metric");

    EXPECT_EQ(d.fs_access("com.example.weather", "/sdcard/DCIM/img.jpg", FsOp::read).status,
              FsStatus::permission_denied);
    EXPECT_EQ(d.fs_access("com.example.weather", "../../../../DCIM/img.jpg", FsOp::read).status,
              FsStatus::permission_denied);
    EXPECT_EQ(d.fs_access("com.example.weather", "missing", FsOp::read).status, FsStatus::not_found);
    EXPECT_EQ(d.fs_access("com.example.weather", "", FsOp::read).status, FsStatus::malformed_path);
}

TEST(Storage, LegacyAppSeesEverything) {
    Device d;
    d.install({"com.example.weather", {{s(cat::kSelectiveSdcard), std::nullopt}}, {}, false});
    d.fs_access("com.example.weather", "secret.txt", FsOp::write, "s3cret");
    d.install({"com.example.gallery", {{s(cat::kExternalStorage), std::nullopt}}, {}, true});
    const FsOutcome r = d.fs_access("com.example.gallery",
                                    sandbox_root("com.example.weather") + "/secret.txt", FsOp::read);
    EXPECT_EQ(r.status, FsStatus::ok);
    EXPECT_EQ(r.data, "s3cret");
}

TEST(Storage, NoGrantNoAccess) {
    Device d;
    d.install({"com.example.bare", {}, {}, false});
    EXPECT_EQ(d.fs_access("com.example.bare", "x", FsOp::write, "x").status, FsStatus::permission_denied);
    EXPECT_EQ(d.fs_access("com.example.absent", "x", FsOp::write, "x").status, FsStatus::permission_denied);
}

// Two proxied apps try the same random paths; what each can touch is disjoint.
TEST(Storage, IsolationBetweenProxiedApps) {
    Device d;
    d.install({"com.a", {{s(cat::kSelectiveSdcard), std::nullopt}}, {}, false});
    d.install({"com.ab", {{s(cat::kSelectiveSdcard), std::nullopt}}, {}, false});
    const std::vector<std::string> segs{"x", "..", ".", "com.a", "com.ab", "files", "data", "Android", ""};
    std::mt19937 rng(3);
    std::set<std::string> a_paths;
    std::set<std::string> b_paths;
    for (int i = 0; i < 500; ++i) {
        std::string p = (rng() % 4 == 0) ? "/sdcard/Android/data" : "";
        for (int j = 0, n = 1 + static_cast<int>(rng() % 6); j < n; ++j) p += (p.empty() ? "" : "/") + segs[rng() % segs.size()];
        if (p.empty()) continue;
        const FsOutcome a = d.fs_access("com.a", p, FsOp::write, "a");
        const FsOutcome b = d.fs_access("com.ab", p, FsOp::write, "b");
        if (a.status != FsStatus::permission_denied && a.status != FsStatus::malformed_path) a_paths.insert(a.path);
        if (b.status != FsStatus::permission_denied && b.status != FsStatus::malformed_path) b_paths.insert(b.path);
    }
    EXPECT_FALSE(a_paths.empty());
    for (const std::string& p : a_paths) {
        EXPECT_TRUE(is_within(sandbox_root("com.a"), p)) << p;
        EXPECT_FALSE(b_paths.contains(p)) << p;
    }
    for (const std::string& p : b_paths) EXPECT_TRUE(is_within(sandbox_root("com.ab"), p)) << p;
}

TEST(Lifecycle, UninstallAndReplace) {
    Device d;
    d.install({"com.example.news", {{s(cat::kDomainSelective), ParamValues{"*.bbc.co.uk"}}}, {}, false});
    EXPECT_TRUE(d.uninstall("com.example.news"));
    EXPECT_FALSE(d.uninstall("com.example.news"));
    EXPECT_EQ(d.authorize_call("com.example.news", cat::kApiSelectiveHttp), CallVerdict::deny);

    ProxyDescriptor v2 = *d.store().find(cat::kDomainSelectiveProxy);
    v2.loc_estimate = 500;
    d.replace_proxy(v2);
    EXPECT_EQ(d.store().find(cat::kDomainSelectiveProxy)->loc_estimate, 500);
}

TEST(Snapshot, ListsAppsPoliciesAndCounters) {
    Device d;
    d.install({"com.example.notes", {{s(cat::kCollectUsageStats), std::nullopt}}, {}, false});
    const nlohmann::json j = d.snapshot();
    ASSERT_TRUE(j.contains("apps"));
    bool found = false;
    for (const auto& a : j["apps"]) {
        if (a["package"] == "com.example.notes") {
            found = true;
            EXPECT_EQ(a["footprint"].size(), 2u);
        }
    }
    EXPECT_TRUE(found);
    EXPECT_TRUE(j.contains("policies"));
    EXPECT_EQ(j["network"]["connected"], true);
    EXPECT_TRUE(j.contains("stats"));
}

TEST(EventLog, SequenceAndTime) {
    Device d({.start_time_ms = 1000});
    d.install({"com.example.notes", {{s(cat::kCollectUsageStats), std::nullopt}}, {}, false});
    d.tick();
    d.report_stat("com.example.notes", "e");
    std::uint64_t seq = 0;
    std::int64_t t = 0;
    for (const LogEntry& e : d.log().entries()) {
        EXPECT_EQ(e.seq, ++seq);
        EXPECT_GE(e.time, t);
        EXPECT_GE(e.time, 1000);
        t = e.time;
    }
}
