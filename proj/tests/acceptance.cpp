// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Links only permesh_core; the control API and console are not needed.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "permesh/bench.hpp"
#include "permesh/catalog.hpp"
#include "permesh/device.hpp"
#include "permesh/error.hpp"
#include "permesh/scenario.hpp"
#include "permesh/vfs.hpp"

using namespace permesh;
namespace cat = permesh::catalog;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kRoot = PERMESH_SOURCE_DIR;

struct Verdict {
    bool ok = false;
    std::string detail;
};

std::vector<json> parse_log(const std::string& jsonl) {
    std::vector<json> out;
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) out.push_back(json::parse(line));
    return out;
}

std::vector<std::string> bundled_scenarios() {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(kRoot + "/scenarios")) {
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Verdict hermeticity() {
    const auto start = std::chrono::steady_clock::now();
    Device d;
    std::size_t checks = 0;
    std::size_t violations = 0;
    int n = 0;
    for (const auto& proxy : d.store().available()) {
        const std::string pkg = "com.acceptance.app" + std::to_string(n++);
        PermissionRequest req{proxy->exposes.id, std::nullopt};
        if (proxy->exposes.schema && proxy->exposes.schema->kind == ParamKind::domain_patterns) {
            req.params = ParamValues{"*.example.com"};
        }
        if (!d.install({pkg, {req}, {}, false}).installed) return {false, "install failed for " + proxy->id};
        // The app holds no native grant, so every native API must refuse it.
        for (const std::string& op : d.registry().all_native_apis()) {
            ++checks;
            if (d.authorize_call(pkg, op) != CallVerdict::deny) ++violations;
        }
        if (d.footprint(pkg).empty()) return {false, proxy->id + " resolved to an empty footprint"};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream os;
    os << checks << " checks over " << n << " proxies, " << violations << " violations, " << secs << " s";
    return {violations == 0 && checks > 0 && secs < 5.0, os.str()};
}

Verdict footprint_exactness() {
    PermissionRegistry r;
    ProxyStore store;
    cat::seed(r, store);
    const std::string s_internet(cat::kInternet);
    const Footprint stats_expected{{s_internet, ParamValues{"*.google-analytics.com"}},
                                   {std::string(cat::kNetworkState), std::nullopt}};
    const Footprint phone_expected{{std::string(cat::kWakeScreen), std::nullopt},
                                   {std::string(cat::kRingDevice), std::nullopt},
                                   {std::string(cat::kRecordAudio), std::nullopt},
                                   {std::string(cat::kBluetooth), std::nullopt}};
    const bool stats_ok = resolve_footprint(r, cat::kCollectUsageStats) == stats_expected;
    const bool phone_ok = resolve_footprint(r, cat::kActAsPhone) == phone_expected;
    return {stats_ok && phone_ok, std::string("usage-stats ") + (stats_ok ? "exact" : "differs") + ", phone " +
                                      (phone_ok ? "exact" : "differs")};
}

Verdict matcher_oracle() {
    struct Row {
        const char* p;
        const char* h;
        bool want;
    };
    const Row table[] = {{"*.bbc.co.uk", "news.bbc.co.uk", true},
                         {"*.bbc.co.uk", "bbc.co.uk", true},
                         {"*.bbc.co.uk", "evilbbc.co.uk", false},
                         {"*.google-analytics.com", "ssl.google-analytics.com", true}};
    std::size_t fixed_ok = 0;
    for (const Row& r : table) {
        if (match_domain(DomainPattern::parse(r.p), r.h) == r.want && oracle::domain_matches(r.p, r.h) == r.want) {
            ++fixed_ok;
        }
    }
    std::mt19937 rng(0x5eed);
    const std::vector<std::string> labels{"a", "b", "bbc", "co", "uk", "com", "evil", "x-y", "Bbc", "google"};
    auto name = [&](int min) {
        std::string out;
        const int n = min + static_cast<int>(rng() % 3);
        for (int i = 0; i < n; ++i) out += (i ? "." : "") + labels[rng() % labels.size()];
        return out;
    };
    std::size_t agree = 0;
    const std::size_t total = 10000;
    for (std::size_t i = 0; i < total; ++i) {
        const std::string base = name(2);
        const std::string pattern = (rng() % 2) ? "*." + base : base;
        std::string host;
        switch (rng() % 4) {
            case 0: host = name(1); break;
            case 1: host = name(1) + "." + base; break;
            case 2: host = base; break;
            default: host = labels[rng() % labels.size()] + base; break;
        }
        if (match_domain(DomainPattern::parse(pattern), host) == oracle::domain_matches(pattern, host)) ++agree;
    }
    std::ostringstream os;
    os << agree << "/" << total << " random pairs, " << fixed_ok << "/4 fixed rows";
    return {agree == total && fixed_ok == 4, os.str()};
}

Verdict chroot_fuzz() {
    const std::string root = sandbox_root("com.acceptance.fuzz");
    const std::vector<std::string> segs{"notes", "a", ".", "..", "", "\xc3\xa9t\xc3\xa9", "\xe2\x98\x83", "files",
                                        "data", "...", "a\\b", "Android", "sdcard", "com.acceptance.fuzz"};
    std::mt19937 rng(1000);
    std::size_t escapes = 0;
    std::size_t disagreements = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string path = (rng() % 5 == 0) ? ((rng() % 2) ? root : std::string("/sdcard")) : "";
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int j = 0; j < n; ++j) path += (path.empty() && j == 0 ? "" : "/") + segs[rng() % segs.size()];
        std::optional<std::string> got;
        try {
            got = canonicalize(root, path);
        } catch (const Error&) {
        }
        if (got && !is_within(root, *got)) ++escapes;
        if (got != oracle::normalize_under(root, path)) ++disagreements;
    }
    std::ostringstream os;
    os << "1000 paths, " << escapes << " escapes, " << disagreements << " disagreements with the reference";
    return {escapes == 0 && disagreements == 0, os.str()};
}

Verdict rogue_dns() {
    const Scenario s = load_scenario(kRoot + "/scenarios/rogue-dns.json");
    RunOptions on;
    on.pinning = true;
    RunOptions off;
    off.pinning = false;
    const Report a = run_scenario(s, on);
    const Report b = run_scenario(s, off);
    auto count = [](const Report& r, const std::string& verdict, bool rogue) {
        std::size_t n = 0;
        for (const json& e : parse_log(r.event_log)) {
            if (e["action"] == "http" && e["verdict"] == verdict &&
                (!rogue || e["params"]["address"] == "203.0.113.66")) {
                ++n;
            }
        }
        return n;
    };
    const std::size_t attack_on = count(a, "delivered", true);
    const std::size_t attack_off = count(b, "delivered", true);
    const std::size_t mismatches = count(a, "denied-pin-mismatch", false);
    std::ostringstream os;
    os << "pinning on: " << (a.pass ? "pass" : "FAIL") << ", " << mismatches << " pin mismatches, " << attack_on
       << " rogue deliveries; pinning off: " << (b.pass ? "pass" : "FAIL") << ", " << attack_off
       << " rogue deliveries";
    return {a.pass && b.pass && attack_on == 0 && mismatches > 0 && attack_off > 0, os.str()};
}

Verdict fake_vs_block() {
    Device d;
    d.install({"com.acceptance.reader", {{std::string(cat::kInternet), std::nullopt}}, {}, true});
    d.dns().add_record("news.example.com", *Ipv4::parse("10.0.0.30"));
    SlicePolicy p;
    p.app = "com.acceptance.reader";
    p.allowed_domains = {DomainPattern::parse("*.example.com")};
    p.default_action = DefaultAction::fake;
    d.set_slice_policy(p);
    const HttpOutcome faked = d.http_request("com.acceptance.reader", HttpMethod::get, "http://ads.tracker.example/");
    const HttpOutcome genuine = d.http_request("com.acceptance.reader", HttpMethod::get, "http://gone.example.com/");
    const bool identical = faked.status == HttpStatus::fake_unreachable && genuine.status == HttpStatus::unreachable &&
                           app_view(faked)->serialize() == app_view(genuine)->serialize();

    const Report r = run_scenario(load_scenario(kRoot + "/scenarios/firewall-slicing.json"));
    const std::string fake_status = r.app_status.count("com.example.news") ? r.app_status.at("com.example.news") : "?";
    const std::string block_status =
        r.app_status.count("com.example.news.blocked") ? r.app_status.at("com.example.news.blocked") : "?";
    std::ostringstream os;
    os << "app view " << (identical ? "byte-identical" : "differs") << " (" << app_view(faked)->serialize()
       << "); scripted app under fake: " << fake_status << ", under block: " << block_status;
    return {identical && r.pass && fake_status == "finished" && block_status == "failed", os.str()};
}

Verdict stats_gating() {
    const Report r = run_scenario(load_scenario(kRoot + "/scenarios/usage-stats.json"));
    bool connected = true;
    std::size_t reported = 0;
    std::size_t delivered = 0;
    std::size_t while_down = 0;
    std::size_t off_host = 0;
    std::set<std::uint64_t> seen;
    bool ordered = true;
    std::uint64_t last = 0;
    const DomainPattern analytics = DomainPattern::parse(cat::kAnalyticsPattern);
    for (const json& e : parse_log(r.event_log)) {
        if (e["action"] == "network.state") connected = e["params"]["connected"].get<bool>();
        if (e["action"] == "stats.report" && e["verdict"] == "buffered") ++reported;
        if (e["action"] == "stats.deliver" && e["verdict"] == "delivered") {
            ++delivered;
            if (!connected) ++while_down;
            if (!match_domain(analytics, e["params"]["host"].get<std::string>())) ++off_host;
            const auto seq = e["params"]["seq"].get<std::uint64_t>();
            if (!seen.insert(seq).second || seq <= last) ordered = false;
            last = seq;
        }
    }
    std::ostringstream os;
    os << reported << " reported, " << delivered << " delivered, " << while_down << " while disconnected, " << off_host
       << " off-pattern, " << (ordered ? "in order once each" : "order or duplicate violation");
    return {r.pass && reported > 0 && reported == delivered && while_down == 0 && off_host == 0 && ordered, os.str()};
}

Verdict mic_safety() {
    auto activations = [](const std::string& name, bool& pass) {
        const Report r = run_scenario(load_scenario(kRoot + "/scenarios/" + name));
        pass = pass && r.pass;
        std::size_t n = 0;
        for (const json& e : parse_log(r.event_log)) {
            if (e["action"] == "phone.mic" && e["verdict"] == "capturing") ++n;
        }
        return n;
    };
    bool pass = true;
    const std::size_t none = activations("phone-no-token.json", pass);
    const std::size_t one = activations("phone-one-token.json", pass);
    const std::size_t replay = activations("phone-replay.json", pass);

    Device d;
    d.install({"com.acceptance.voip", {{std::string(cat::kActAsPhone), std::nullopt}}, {}, false});
    const std::string s = *d.incoming_call("com.acceptance.voip");
    d.answer_call("com.acceptance.voip", s);
    const bool self_denied = !d.start_mic_capture("com.acceptance.voip", s, std::nullopt).capturing;

    std::ostringstream os;
    os << "activations " << none << "/" << one << "/" << replay << " (want 0/1/1), self-initiated "
       << (self_denied ? "denied" : "ALLOWED");
    return {pass && none == 0 && one == 1 && replay == 1 && self_denied, os.str()};
}

Verdict bench_overhead() {
    const BenchReport r = run_bench(32, 1.0);
    std::ostringstream os;
    os << "n=32, direct median pipeline " << r.direct.median_pipeline_ms << " ms, proxy "
       << r.proxy.median_pipeline_ms << " ms, overhead " << r.overhead_ms << " ms";
    return {r.proxy.request_ms.size() == 32 && r.direct.request_ms.size() == 32 && r.overhead_ms < 1.0, os.str()};
}

Verdict determinism() {
    std::size_t identical = 0;
    const auto paths = bundled_scenarios();
    std::string first_diff;
    for (const std::string& path : paths) {
        const Scenario s = load_scenario(path);
        const Report a = run_scenario(s);
        const Report b = run_scenario(s);
        if (!a.event_log.empty() && a.event_log == b.event_log) {
            ++identical;
        } else if (first_diff.empty()) {
            first_diff = fs::path(path).filename().string();
        }
    }
    std::ostringstream os;
    os << identical << "/" << paths.size() << " scenarios byte-identical across two runs";
    if (!first_diff.empty()) os << ", first difference in " << first_diff;
    return {!paths.empty() && identical == paths.size(), os.str()};
}

Verdict no_secondary() {
    // This binary links only the core library, and the build tree holds no
    // console bundle.
    std::size_t console_files = 0;
    for (const auto& e : fs::recursive_directory_iterator(PERMESH_BUILD_DIR)) {
        const std::string ext = e.path().extension().string();
        if (ext == ".js" || ext == ".ts" || ext == ".html") ++console_files;
    }
    return {console_files == 0, "criteria evaluated by a core-only binary; " + std::to_string(console_files) +
                                    " console artifacts in the build tree"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"hermeticity", hermeticity},
        {"footprint-exactness", footprint_exactness},
        {"matcher-oracle", matcher_oracle},
        {"chroot-fuzz", chroot_fuzz},
        {"rogue-dns-pair", rogue_dns},
        {"fake-vs-block", fake_vs_block},
        {"stats-gating", stats_gating},
        {"mic-safety", mic_safety},
        {"bench-overhead", bench_overhead},
        {"determinism", determinism},
        {"no-secondary-component", no_secondary},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.ok) ++failures;
        std::cout << (v.ok ? "PASS " : "FAIL ") << name << ": " << v.detail << '\n';
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
