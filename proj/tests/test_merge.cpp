#include <random>

#include <gtest/gtest.h>

#include "permesh/catalog.hpp"
#include "permesh/device.hpp"
#include "permesh/error.hpp"

using namespace permesh;
namespace cat = permesh::catalog;

namespace {

const AppManifest kNotes{"com.example.notes", {{std::string(cat::kCollectUsageStats), std::nullopt}}, {}, false};
const AppManifest kVoip{"com.example.voip", {{std::string(cat::kActAsPhone), std::nullopt}}, {}, false};

std::size_t count(const Device& d, const std::string& action, const std::string& verdict = {}) {
    std::size_t n = 0;
    for (const LogEntry& e : d.log().entries()) {
        if (e.action == action && (verdict.empty() || e.verdict == verdict)) ++n;
    }
    return n;
}

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

TEST(UsageStats, InstallLayersOnDomainSelective) {
    Device d;
    const InstallResult r = d.install(kNotes);
    ASSERT_TRUE(r.installed);
    EXPECT_EQ(r.proxies_installed,
              (std::vector<std::string>{std::string(cat::kDomainSelectiveProxy), std::string(cat::kUsageStatsProxy)}));
    const Footprint expected{{std::string(cat::kInternet), ParamValues{"*.google-analytics.com"}},
                             {std::string(cat::kNetworkState), std::nullopt}};
    EXPECT_EQ(d.footprint("com.example.notes"), expected);
}

TEST(UsageStats, BufferedWhileDisconnectedThenFlushed) {
    Device d;
    d.install(kNotes);
    d.set_network_state(false);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(d.report_stat("com.example.notes", "open"), StatOutcome::buffered);
    EXPECT_EQ(d.stats().buffered(), 3u);
    EXPECT_EQ(d.stats().flushed(), 0u);
    EXPECT_EQ(count(d, "stats.deliver"), 0u);

    d.set_network_state(true);
    EXPECT_EQ(d.stats().flushed(), 3u);
    EXPECT_EQ(d.stats().buffered(), 0u);
    EXPECT_EQ(count(d, "stats.deliver", "delivered"), 3u);
    for (const ReceivedRequest& r : d.network().received()) {
        EXPECT_TRUE(match_domain(DomainPattern::parse(cat::kAnalyticsPattern), r.host)) << r.host;
    }

    d.set_network_state(true);  // no transition
    EXPECT_EQ(count(d, "stats.deliver"), 3u);
}

TEST(UsageStats, ConnectWithEmptyBufferDeliversNothing) {
    Device d;
    d.install(kNotes);
    d.set_network_state(false);
    d.set_network_state(true);
    EXPECT_EQ(count(d, "stats.deliver"), 0u);
    EXPECT_TRUE(d.network().received().empty());
}

TEST(UsageStats, ConnectedReportDeliversImmediately) {
    Device d;
    d.install(kNotes);
    EXPECT_EQ(d.report_stat("com.example.notes", "open"), StatOutcome::buffered);
    EXPECT_EQ(d.stats().flushed(), 1u);
    ASSERT_EQ(d.network().received().size(), 1u);
    EXPECT_EQ(d.network().received()[0].host, cat::kAnalyticsHost);
    EXPECT_EQ(d.network().received()[0].method, HttpMethod::post);
}

TEST(UsageStats, UngrantedAppDenied) {
    Device d;
    d.install(kNotes);
    d.install({"com.example.other", {}, {}, false});
    EXPECT_EQ(d.report_stat("com.example.other", "open"), StatOutcome::denied);
    EXPECT_EQ(d.stats().reported(), 0u);
    EXPECT_EQ(d.stats().buffered(), 0u);
}

// Random interleavings of reports and link flaps: conservation holds at
// every step and deliveries never happen while disconnected.
TEST(UsageStats, ConservationUnderRandomInterleavings) {
    std::mt19937 rng(42);
    for (int round = 0; round < 50; ++round) {
        Device d;
        d.install(kNotes);
        std::uint64_t reported = 0;
        for (int step = 0; step < 60; ++step) {
            if (rng() % 3 == 0) {
                d.set_network_state(rng() % 2 == 0);
            } else {
                d.report_stat("com.example.notes", "e" + std::to_string(step));
                ++reported;
            }
            const std::size_t delivered = count(d, "stats.deliver", "delivered");
            ASSERT_EQ(d.stats().reported(), reported);
            ASSERT_EQ(reported, delivered + d.stats().buffered());
            if (d.connected()) ASSERT_EQ(d.stats().buffered(), 0u);
        }
        bool connected = true;
        std::uint64_t last = 0;
        for (const LogEntry& e : d.log().entries()) {
            if (e.action == "network.state") connected = e.params["connected"].get<bool>();
            if (e.action == "stats.deliver" && e.verdict == "delivered") {
                EXPECT_TRUE(connected);
                const auto seq = e.params["seq"].get<std::uint64_t>();
                EXPECT_EQ(seq, last + 1);
                last = seq;
            }
        }
    }
}

TEST(Phone, IncomingCallWakesAndRingsThroughTheProxy) {
    Device d;
    d.install(kVoip);
    const auto session = d.incoming_call("com.example.voip");
    ASSERT_TRUE(session);
    EXPECT_EQ(d.phones().find(*session)->state, SessionState::ringing);
    std::vector<std::string> natives;
    for (const LogEntry& e : d.log().entries()) {
        if (e.action == "native.call") {
            EXPECT_EQ(e.actor.kind, ActorKind::proxy);
            EXPECT_EQ(e.actor.name, cat::kPhoneProxy);
            natives.push_back(e.params["op"].get<std::string>());
        }
    }
    EXPECT_EQ(natives, (std::vector<std::string>{std::string(cat::kApiScreenWake), std::string(cat::kApiRing)}));

    const auto second = d.incoming_call("com.example.voip");
    ASSERT_TRUE(second);
    EXPECT_NE(*second, *session);
}

TEST(Phone, UngrantedAppGetsNothing) {
    Device d;
    d.install(kVoip);
    d.install({"com.example.spy", {}, {}, false});
    const std::size_t before = d.log().size();
    EXPECT_FALSE(d.incoming_call("com.example.spy"));
    EXPECT_EQ(d.log().size(), before);
    EXPECT_TRUE(d.phones().sessions().empty());
}

TEST(Phone, MicNeedsAFreshTokenForTheSession) {
    Device d;
    d.install(kVoip);
    const std::string s = *d.incoming_call("com.example.voip");
    const std::string other = *d.incoming_call("com.example.voip");
    EXPECT_TRUE(d.answer_call("com.example.voip", s));

    EXPECT_FALSE(d.start_mic_capture("com.example.voip", s, std::nullopt).capturing);

    const std::string t = d.issue_user_action(s);
    EXPECT_TRUE(d.start_mic_capture("com.example.voip", s, t).capturing);
    EXPECT_TRUE(d.phones().token(t)->consumed);
    EXPECT_EQ(code_of([&] { d.start_mic_capture("com.example.voip", s, t); }), Errc::token_replay);

    const std::string t2 = d.issue_user_action(other);
    EXPECT_EQ(code_of([&] { d.start_mic_capture("com.example.voip", s, t2); }), Errc::wrong_session_token);
    EXPECT_EQ(code_of([&] { d.start_mic_capture("com.example.voip", s, "forged"); }), Errc::wrong_session_token);
    // Not connected yet: denied, and the token survives.
    EXPECT_FALSE(d.start_mic_capture("com.example.voip", other, t2).capturing);
    EXPECT_FALSE(d.phones().token(t2)->consumed);

    EXPECT_EQ(code_of([&] { d.issue_user_action("call-999"); }), Errc::invalid_session);
    EXPECT_EQ(code_of([&] { d.answer_call("com.example.voip", "call-999"); }), Errc::invalid_session);
}

TEST(Phone, BluetoothFollowsTheCallState) {
    Device d;
    d.install(kVoip);
    const std::string s = *d.incoming_call("com.example.voip");
    EXPECT_FALSE(d.use_bluetooth("com.example.voip", s));
    d.answer_call("com.example.voip", s);
    EXPECT_TRUE(d.use_bluetooth("com.example.voip", s));
    EXPECT_TRUE(d.hang_up("com.example.voip", s));
    EXPECT_FALSE(d.use_bluetooth("com.example.voip", s));
    EXPECT_EQ(code_of([&] { d.issue_user_action(s); }), Errc::invalid_session);
}

TEST(Phone, SessionsBelongToTheirApp) {
    Device d;
    d.install(kVoip);
    d.install({"com.example.voip2", {{std::string(cat::kActAsPhone), std::nullopt}}, {}, false});
    const std::string s = *d.incoming_call("com.example.voip");
    EXPECT_EQ(code_of([&] { d.answer_call("com.example.voip2", s); }), Errc::invalid_session);
}
