#include "permesh/net.hpp"

#include <charconv>

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

void DnsTable::add_record(std::string host, Ipv4 address) {
    records_[to_lower(host)] = address;
}

DnsTable DnsTable::from_json(const json& seed) {
    if (!seed.is_object()) {
        throw Error(Errc::parse_error, "DNS seed must be an object of hostname -> dotted quad");
    }
    DnsTable table;
    for (const auto& [host, value] : seed.items()) {
        const std::string lowered = to_lower(host);
        if (!is_valid_hostname(lowered)) {
            throw Error(Errc::parse_error, "DNS seed: invalid hostname '" + host + "'");
        }
        const auto ip = value.is_string() ? Ipv4::parse(value.get<std::string>()) : std::nullopt;
        if (!ip) {
            throw Error(Errc::parse_error, "DNS seed: '" + host + "' needs a dotted-quad address");
        }
        table.records_[lowered] = *ip;
    }
    return table;
}

void DnsTable::set_rogue_overlay(std::map<std::string, Ipv4> mapping, bool active) {
    for (auto& [host, ip] : mapping) {
        overlay_[to_lower(host)] = ip;
    }
    overlay_active_ = active;
}

std::optional<Ipv4> DnsTable::lookup(std::string_view host) const {
    if (overlay_active_) {
        if (auto it = overlay_.find(host); it != overlay_.end()) {
            return it->second;
        }
    }
    if (auto it = records_.find(host); it != records_.end()) {
        return it->second;
    }
    return std::nullopt;
}

ResolveResult DnsTable::resolve_and_pin(std::string_view host, bool pinning) {
    ResolveResult r;
    r.address = lookup(host);
    r.pinned = pin(host);
    if (!r.address) {
        r.status = ResolveStatus::resolution_failure;
        return r;
    }
    if (!pinning) {
        r.status = ResolveStatus::resolved;
        return r;
    }
    if (!r.pinned) {
        pins_.emplace(std::string(host), *r.address);
        r.pinned = r.address;
        r.pin_created = true;
        r.status = ResolveStatus::resolved;
        return r;
    }
    r.status = *r.pinned == *r.address ? ResolveStatus::resolved : ResolveStatus::pin_mismatch;
    return r;
}

std::optional<Ipv4> DnsTable::pin(std::string_view host) const {
    auto it = pins_.find(host);
    return it == pins_.end() ? std::nullopt : std::optional<Ipv4>(it->second);
}

std::string_view to_string(HttpMethod m) noexcept {
    return m == HttpMethod::get ? "GET" : "POST";
}

std::optional<HttpMethod> http_method_from_string(std::string_view s) noexcept {
    if (s == "GET" || s == "get") return HttpMethod::get;
    if (s == "POST" || s == "post") return HttpMethod::post;
    return std::nullopt;
}

Url Url::parse(std::string_view text) {
    constexpr std::string_view scheme = "http://";
    if (!text.starts_with(scheme)) {
        throw Error(Errc::malformed_url, "only http:// URLs are supported: " + std::string(text));
    }
    std::string_view rest = text.substr(scheme.size());
    const std::size_t slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    Url url;
    url.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));

    if (const std::size_t colon = authority.rfind(':'); colon != std::string_view::npos) {
        const std::string_view port = authority.substr(colon + 1);
        unsigned value = 0;
        const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
        if (port.empty() || ec != std::errc{} || end != port.data() + port.size() || value == 0 || value > 65535) {
            throw Error(Errc::malformed_url, "bad port in " + std::string(text));
        }
        url.port = static_cast<std::uint16_t>(value);
        authority = authority.substr(0, colon);
    }
    url.host = to_lower(authority);
    if (!is_valid_hostname(url.host)) {
        throw Error(Errc::malformed_url, "bad host in " + std::string(text));
    }
    return url;
}

std::string_view to_string(HttpStatus s) noexcept {
    switch (s) {
        case HttpStatus::delivered: return "delivered";
        case HttpStatus::denied_no_grant: return "denied-no-grant";
        case HttpStatus::denied_pin_mismatch: return "denied-pin-mismatch";
        case HttpStatus::blocked_by_policy: return "blocked-by-policy";
        case HttpStatus::fake_unreachable: return "fake-unreachable";
        case HttpStatus::pending: return "pending";
        case HttpStatus::unreachable: return "unreachable";
    }
    return "unknown";
}

std::optional<HttpStatus> http_status_from_string(std::string_view s) noexcept {
    for (HttpStatus v : {HttpStatus::delivered, HttpStatus::denied_no_grant, HttpStatus::denied_pin_mismatch,
                         HttpStatus::blocked_by_policy, HttpStatus::fake_unreachable, HttpStatus::pending,
                         HttpStatus::unreachable}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    return std::nullopt;
}

json AppHttpResult::to_json() const {
    if (ok) {
        return json{{"ok", true}, {"status", status}, {"body", body}};
    }
    return json{{"ok", false}, {"error", error}};
}

std::optional<AppHttpResult> app_view(const HttpOutcome& outcome) {
    AppHttpResult r;
    switch (outcome.status) {
        case HttpStatus::delivered:
            r.ok = true;
            r.status = outcome.response_code;
            r.body = outcome.response_body;
            return r;
        case HttpStatus::fake_unreachable:
        case HttpStatus::unreachable:
            r.error = "host-unreachable";
            return r;
        case HttpStatus::blocked_by_policy:
        case HttpStatus::denied_pin_mismatch:
            r.error = "connection-refused";
            return r;
        case HttpStatus::denied_no_grant:
            r.error = "permission-denied";
            return r;
        case HttpStatus::pending:
            return std::nullopt;
    }
    return std::nullopt;
}

void StubNetwork::add_server(Ipv4 address, StubServer server) {
    servers_[address] = std::move(server);
}

const StubServer& StubNetwork::server_at(Ipv4 address) const {
    static const StubServer generic{"generic", 200, "ok"};
    auto it = servers_.find(address);
    return it == servers_.end() ? generic : it->second;
}

}  // namespace permesh
