#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "permesh/domain.hpp"

namespace permesh {

// ---------------------------------------------------------------------------
// Simulated DNS with resolve-and-pin.

enum class ResolveStatus { resolved, pin_mismatch, resolution_failure };

struct ResolveResult {
    ResolveStatus status = ResolveStatus::resolution_failure;
    std::optional<Ipv4> address;  // the effective answer, if any
    std::optional<Ipv4> pinned;   // the pin in force after the call
    bool pin_created = false;
};

class DnsTable {
public:
    void add_record(std::string host, Ipv4 address);
    // Throws Error(parse_error) on malformed hosts or addresses.
    static DnsTable from_json(const nlohmann::json& seed);

    // The overlay models a rogue resolver; while active it answers first.
    void set_rogue_overlay(std::map<std::string, Ipv4> mapping, bool active);
    void set_overlay_active(bool active) { overlay_active_ = active; }
    bool overlay_active() const noexcept { return overlay_active_; }

    // What the resolver would answer right now, ignoring pins.
    std::optional<Ipv4> lookup(std::string_view host) const;

    // With pinning on, the first successful answer is pinned for the rest of
    // the run and any later answer that differs is reported as a mismatch.
    ResolveResult resolve_and_pin(std::string_view host, bool pinning = true);

    std::optional<Ipv4> pin(std::string_view host) const;
    const std::map<std::string, Ipv4, std::less<>>& pins() const noexcept { return pins_; }
    const std::map<std::string, Ipv4, std::less<>>& records() const noexcept { return records_; }

private:
    std::map<std::string, Ipv4, std::less<>> records_;
    std::map<std::string, Ipv4, std::less<>> overlay_;
    bool overlay_active_ = false;
    std::map<std::string, Ipv4, std::less<>> pins_;
};

// ---------------------------------------------------------------------------
// HTTP mediation types.

enum class HttpMethod { get, post };
std::string_view to_string(HttpMethod m) noexcept;
std::optional<HttpMethod> http_method_from_string(std::string_view s) noexcept;

// http://host[:port]/path
struct Url {
    std::string host;  // lowercased
    std::uint16_t port = 80;
    std::string path = "/";

    // Throws Error(malformed_url).
    static Url parse(std::string_view text);
    bool host_is_ip() const { return Ipv4::parse(host).has_value(); }
};

enum class HttpStatus {
    delivered,
    denied_no_grant,
    denied_pin_mismatch,
    blocked_by_policy,
    fake_unreachable,
    pending,
    unreachable,  // genuine failure: unknown host or no network
};

std::string_view to_string(HttpStatus s) noexcept;
std::optional<HttpStatus> http_status_from_string(std::string_view s) noexcept;

struct HttpOutcome {
    HttpStatus status = HttpStatus::unreachable;
    std::string detail;
    double timing_ms = 0.0;
    std::optional<Ipv4> address;
    int response_code = 0;
    std::string response_body;
    std::optional<std::uint64_t> pending_id;
};

// What the app's code observes. The firewall's fake verdict and a genuine
// network failure map to the same value.
struct AppHttpResult {
    bool ok = false;
    int status = 0;
    std::string body;
    std::string error;  // "host-unreachable" | "connection-refused" | "permission-denied"

    nlohmann::json to_json() const;
    std::string serialize() const { return to_json().dump(); }
    friend bool operator==(const AppHttpResult&, const AppHttpResult&) = default;
};

// Empty for pending outcomes, which the app never observes directly.
std::optional<AppHttpResult> app_view(const HttpOutcome& outcome);

// ---------------------------------------------------------------------------
// In-process stub servers keyed by address.

struct StubServer {
    std::string name;
    int status = 200;
    std::string body = "ok";
};

struct ReceivedRequest {
    Ipv4 address;
    std::string host;
    std::string path;
    HttpMethod method = HttpMethod::get;
    std::string body;
};

class StubNetwork {
public:
    void add_server(Ipv4 address, StubServer server);
    // Unknown addresses answer with a generic 200.
    const StubServer& server_at(Ipv4 address) const;
    void record(ReceivedRequest request) { received_.push_back(std::move(request)); }
    const std::vector<ReceivedRequest>& received() const noexcept { return received_; }

private:
    std::map<Ipv4, StubServer> servers_;
    std::vector<ReceivedRequest> received_;
};

}  // namespace permesh
