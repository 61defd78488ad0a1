#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "permesh/capability.hpp"
#include "permesh/event_log.hpp"
#include "permesh/firewall.hpp"
#include "permesh/merge.hpp"
#include "permesh/net.hpp"
#include "permesh/proxy.hpp"
#include "permesh/vfs.hpp"

namespace permesh {

struct DeviceConfig {
    bool pinning = true;
    double latency_ms = 1.0;        // simulated per-request network latency
    std::int64_t tick_ms = 1;       // simulated time per queue step
    std::int64_t start_time_ms = 0;
    bool seed_catalog = true;       // standard natives and the four stock proxies
    bool log_events = true;
    std::string analytics_host = "ssl.google-analytics.com";
};

struct InstallResult {
    bool installed = false;
    std::vector<std::string> proxies_installed;
    const AppInstance* app = nullptr;
    std::string detail;
};

enum class FsStatus { ok, permission_denied, not_found, is_directory, not_directory, not_empty, malformed_path };
std::string_view to_string(FsStatus s) noexcept;

struct FsOutcome {
    FsStatus status = FsStatus::permission_denied;
    std::string path;  // canonical path, when one was computed
    std::string data;
    std::vector<std::string> entries;
    std::string detail;
};

enum class StatOutcome { buffered, denied };

// The simulated handset: OS permission layer, installed proxies, and every
// piece of mediated state. Not thread-safe; callers serialize access.
class Device {
public:
    explicit Device(DeviceConfig config = {});

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    const DeviceConfig& config() const noexcept { return config_; }
    std::int64_t now() const noexcept { return clock_; }
    void tick() { clock_ += config_.tick_ms; }
    void advance_to(std::int64_t t) { clock_ = std::max(clock_, t); }

    PermissionRegistry& registry() noexcept { return registry_; }
    const PermissionRegistry& registry() const noexcept { return registry_; }
    ProxyStore& store() noexcept { return store_; }
    const ProxyStore& store() const noexcept { return store_; }
    const GrantTable& grants() const noexcept { return grants_; }
    DnsTable& dns() noexcept { return dns_; }
    const DnsTable& dns() const noexcept { return dns_; }
    StubNetwork& network() noexcept { return network_; }
    const StubNetwork& network() const noexcept { return network_; }
    VirtualFS& fs() noexcept { return fs_; }
    const VirtualFS& fs() const noexcept { return fs_; }
    const Firewall& firewall() const noexcept { return firewall_; }
    const StatsBuffer& stats() const noexcept { return stats_; }
    const PhoneSessions& phones() const noexcept { return phones_; }
    const EventLog& log() const noexcept { return log_; }
    bool connected() const noexcept { return network_state_.connected; }

    // --- permissions and proxies ------------------------------------------
    const Permission& register_native_permission(std::string id, std::string label, std::string description,
                                                 std::optional<ParamSchema> schema = std::nullopt);
    void register_proxy(ProxyDescriptor descriptor);
    // Swaps the descriptor; an installed old version is reinstalled as the new one.
    void replace_proxy(ProxyDescriptor descriptor);

    // Installs missing proxies (each with its own grant decision, accept-all
    // unless overridden) and then the app. A rejected proxy aborts the app
    // with Error(grant_rejected). Throws the install_app errors.
    InstallResult install(const AppManifest& manifest, GrantDecision decision = GrantDecision::accept_all,
                          const std::map<std::string, GrantDecision, std::less<>>& proxy_decisions = {});
    std::optional<AppInstance> install_proxy(std::string_view proxy_id, GrantDecision decision);
    bool uninstall(std::string_view package);

    const AppInstance* app(std::string_view package) const { return grants_.find(package); }
    CallVerdict authorize_call(std::string_view package, std::string_view op) const;
    Footprint footprint(std::string_view package) const;

    // --- network -----------------------------------------------------------
    // Throws Error(malformed_url).
    HttpOutcome http_request(std::string_view package, HttpMethod method, std::string_view url,
                             std::string body = {});
    bool open_raw_socket(std::string_view package, Ipv4 address);
    void set_rogue_overlay(std::map<std::string, Ipv4> mapping, bool active);

    // --- firewall ----------------------------------------------------------
    // Throws unknown_app, not_a_legacy_app.
    void set_slice_policy(SlicePolicy policy);
    // Resumes the suspended request. Throws unknown_id, already_resolved.
    const HttpOutcome& decide_pending(std::uint64_t id, Resolution action);
    // The final outcome of a once-pending request, after its decision.
    const HttpOutcome* completed_request(std::uint64_t id) const;

    // --- storage -----------------------------------------------------------
    FsOutcome fs_access(std::string_view package, std::string_view path, FsOp op, std::string payload = {});

    // --- merge proxies -----------------------------------------------------
    StatOutcome report_stat(std::string_view package, std::string_view event);
    void set_network_state(bool connected);

    std::optional<std::string> incoming_call(std::string_view package);
    // False when the caller lacks the phone permission. Throws invalid_session.
    bool answer_call(std::string_view package, std::string_view session);
    // Throws invalid_session, wrong_session_token, token_replay.
    MicResult start_mic_capture(std::string_view package, std::string_view session,
                                const std::optional<std::string>& token);
    bool use_bluetooth(std::string_view package, std::string_view session);
    bool hang_up(std::string_view package, std::string_view session);
    // Operator channel only. Throws invalid_session.
    std::string issue_user_action(std::string_view session);

    // Free-form log line from a driver (scenario runner, control API).
    void note(Actor actor, std::string action, nlohmann::json params, std::string verdict);

    nlohmann::json snapshot() const;

private:
    struct SuspendedRequest {
        std::string package;
        Url url;
        HttpMethod method = HttpMethod::get;
        std::string body;
    };

    Actor actor_for(std::string_view package) const;
    void emit(Actor actor, std::string action, nlohmann::json params, std::string verdict);
    const AppInstance* stats_proxy() const;

    // Resolve, pin, and hand the request to the stub server.
    HttpOutcome deliver(const Url& url, HttpMethod method, const std::string& body);
    void record_http(std::string_view package, const Url& url, HttpMethod method, const std::string& route,
                     const std::string& via, const HttpOutcome& outcome);
    void flush_stats();
    bool proxy_native_call(const AppInstance& proxy, std::string_view op, nlohmann::json params);

    DeviceConfig config_;
    std::int64_t clock_ = 0;
    PermissionRegistry registry_;
    ProxyStore store_;
    GrantTable grants_;
    DnsTable dns_;
    StubNetwork network_;
    VirtualFS fs_;
    Firewall firewall_;
    StatsBuffer stats_;
    NetworkState network_state_;
    PhoneSessions phones_;
    EventLog log_;
    std::map<std::uint64_t, SuspendedRequest> suspended_;
    std::map<std::uint64_t, HttpOutcome> completed_;
};

}  // namespace permesh
