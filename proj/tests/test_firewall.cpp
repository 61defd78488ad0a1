#include <gtest/gtest.h>

#include "permesh/catalog.hpp"
#include "permesh/device.hpp"
#include "permesh/error.hpp"
#include "permesh/firewall.hpp"

using namespace permesh;
namespace cat = permesh::catalog;

namespace {

Ipv4 ip(const char* s) { return *Ipv4::parse(s); }

SlicePolicy policy(const std::string& app, std::vector<std::string> allowed, DefaultAction action) {
    SlicePolicy p;
    p.app = app;
    for (const auto& a : allowed) p.allowed_domains.push_back(DomainPattern::parse(a));
    p.default_action = action;
    return p;
}

AccessRequest get(const std::string& host) { return {host, HttpMethod::get, "/", "http://" + host + "/", ""}; }

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::parse_error;
}

}  // namespace

TEST(Firewall, Evaluate) {
    Firewall fw;
    EXPECT_EQ(fw.evaluate_access("any.app", get("x.example.com"), 0).verdict, FirewallVerdict::allow);

    fw.set_policy(policy("news", {"*.bbc.co.uk"}, DefaultAction::prompt));
    EXPECT_EQ(fw.evaluate_access("news", get("news.bbc.co.uk"), 0).verdict, FirewallVerdict::allow);
    const FirewallEvaluation e = fw.evaluate_access("news", get("tracker.example.com"), 5);
    EXPECT_EQ(e.verdict, FirewallVerdict::pending);
    ASSERT_TRUE(e.pending_id);
    ASSERT_EQ(fw.unresolved().size(), 1u);
    EXPECT_EQ(fw.unresolved()[0]->created_at, 5);

    fw.set_policy(policy("news", {"*.bbc.co.uk"}, DefaultAction::fake));
    EXPECT_EQ(fw.evaluate_access("news", get("tracker.example.com"), 0).verdict, FirewallVerdict::fake);
    fw.set_policy(policy("news", {}, DefaultAction::block));
    EXPECT_EQ(fw.evaluate_access("news", get("news.bbc.co.uk"), 0).verdict, FirewallVerdict::block);
    EXPECT_EQ(fw.evaluate_access("news", get("10.0.0.1"), 0).verdict, FirewallVerdict::block);
    fw.clear_policy("news");
    EXPECT_EQ(fw.policy("news"), nullptr);
}

TEST(Firewall, DecideOnce) {
    Firewall fw;
    fw.set_policy(policy("news", {}, DefaultAction::prompt));
    const std::uint64_t id = *fw.evaluate_access("news", get("a.example.com"), 0).pending_id;
    EXPECT_EQ(fw.decide_pending(id, Resolution::fake).resolution, Resolution::fake);
    EXPECT_EQ(code_of([&] { fw.decide_pending(id, Resolution::allow); }), Errc::already_resolved);
    EXPECT_EQ(code_of([&] { fw.decide_pending(999, Resolution::allow); }), Errc::unknown_id);
    EXPECT_TRUE(fw.unresolved().empty());
    // Each out-of-slice request gets its own decision.
    const std::uint64_t next = *fw.evaluate_access("news", get("a.example.com"), 1).pending_id;
    EXPECT_NE(next, id);
}

class Slicing : public ::testing::Test {
protected:
    void SetUp() override {
        dev.dns().add_record("news.bbc.co.uk", ip("10.0.0.1"));
        dev.dns().add_record("ads.example.com", ip("10.0.0.9"));
        ASSERT_TRUE(dev.install({"com.example.reader", {{std::string(cat::kInternet), std::nullopt}}, {}, true}).installed);
        ASSERT_TRUE(dev.install({"com.example.proxied",
                                 {{std::string(cat::kDomainSelective), ParamValues{"*.bbc.co.uk"}}},
                                 {},
                                 false})
                        .installed);
    }
    HttpOutcome fetch(const char* url) { return dev.http_request("com.example.reader", HttpMethod::get, url); }
    Device dev;
};

TEST_F(Slicing, PolicyTargetsLegacyAppsOnly) {
    EXPECT_EQ(code_of([&] { dev.set_slice_policy(policy("com.example.proxied", {}, DefaultAction::block)); }),
              Errc::not_a_legacy_app);
    EXPECT_EQ(code_of([&] { dev.set_slice_policy(policy("com.example.absent", {}, DefaultAction::block)); }),
              Errc::unknown_app);
}

TEST_F(Slicing, InSliceDeliversSilently) {
    dev.set_slice_policy(policy("com.example.reader", {"*.bbc.co.uk"}, DefaultAction::prompt));
    EXPECT_EQ(fetch("http://news.bbc.co.uk/").status, HttpStatus::delivered);
    EXPECT_TRUE(dev.firewall().unresolved().empty());
}

TEST_F(Slicing, FakeAndBlock) {
    dev.set_slice_policy(policy("com.example.reader", {"*.bbc.co.uk"}, DefaultAction::fake));
    const HttpOutcome faked = fetch("http://ads.example.com/");
    EXPECT_EQ(faked.status, HttpStatus::fake_unreachable);
    const HttpOutcome genuine = fetch("http://nowhere.example.com/");
    EXPECT_EQ(genuine.status, HttpStatus::fake_unreachable);  // out of slice as well

    dev.set_slice_policy(policy("com.example.reader", {"*.bbc.co.uk", "*.example.com"}, DefaultAction::fake));
    const HttpOutcome unresolvable = fetch("http://nowhere.example.com/");
    EXPECT_EQ(unresolvable.status, HttpStatus::unreachable);
    EXPECT_EQ(app_view(faked)->serialize(), app_view(unresolvable)->serialize());

    dev.set_slice_policy(policy("com.example.reader", {}, DefaultAction::block));
    const HttpOutcome blocked = fetch("http://news.bbc.co.uk/");
    EXPECT_EQ(blocked.status, HttpStatus::blocked_by_policy);
    EXPECT_EQ(app_view(blocked)->error, "connection-refused");
    EXPECT_TRUE(dev.network().received().empty());
}

TEST_F(Slicing, PromptSuspendsUntilDecided) {
    dev.set_slice_policy(policy("com.example.reader", {"*.bbc.co.uk"}, DefaultAction::prompt));
    const HttpOutcome p1 = fetch("http://ads.example.com/a");
    const HttpOutcome p2 = fetch("http://ads.example.com/b");
    const HttpOutcome p3 = fetch("http://ads.example.com/c");
    ASSERT_EQ(p1.status, HttpStatus::pending);
    ASSERT_EQ(dev.firewall().unresolved().size(), 3u);
    EXPECT_TRUE(dev.network().received().empty());
    EXPECT_EQ(dev.completed_request(*p1.pending_id), nullptr);

    EXPECT_EQ(dev.decide_pending(*p1.pending_id, Resolution::allow).status, HttpStatus::delivered);
    EXPECT_EQ(dev.decide_pending(*p2.pending_id, Resolution::block).status, HttpStatus::blocked_by_policy);
    EXPECT_EQ(dev.decide_pending(*p3.pending_id, Resolution::fake).status, HttpStatus::fake_unreachable);
    ASSERT_EQ(dev.network().received().size(), 1u);
    EXPECT_EQ(dev.network().received()[0].path, "/a");
    EXPECT_EQ(dev.completed_request(*p2.pending_id)->status, HttpStatus::blocked_by_policy);
    EXPECT_EQ(code_of([&] { dev.decide_pending(*p1.pending_id, Resolution::allow); }), Errc::already_resolved);

    // An allow resolves one request only.
    EXPECT_EQ(fetch("http://ads.example.com/a").status, HttpStatus::pending);
}

TEST_F(Slicing, RawSocketsDeniedUnderPolicy) {
    EXPECT_TRUE(dev.open_raw_socket("com.example.reader", ip("10.0.0.9")));
    dev.set_slice_policy(policy("com.example.reader", {"*.bbc.co.uk"}, DefaultAction::prompt));
    EXPECT_FALSE(dev.open_raw_socket("com.example.reader", ip("10.0.0.9")));
}

TEST(SlicePolicy, Json) {
    const nlohmann::json j = policy("a.b", {"*.bbc.co.uk"}, DefaultAction::fake).to_json();
    EXPECT_EQ(j["app"], "a.b");
    EXPECT_EQ(j["allowedDomains"], nlohmann::json::array({"*.bbc.co.uk"}));
    EXPECT_EQ(j["defaultAction"], "fake");
}
