#include <vector>

#include "permesh/catalog.hpp"
#include "permesh/device.hpp"
#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

namespace {

std::string url_text(const Url& url) {
    std::string s = "http://" + url.host;
    if (url.port != 80) {
        s += ":" + std::to_string(url.port);
    }
    return s + url.path;
}

std::vector<DomainPattern> parse_patterns(const ParamValues& values) {
    std::vector<DomainPattern> out;
    out.reserve(values.size());
    for (const std::string& v : values) {
        out.push_back(DomainPattern::parse(v));
    }
    return out;
}

FsStatus fs_status_for(Errc code) {
    switch (code) {
        case Errc::not_found: return FsStatus::not_found;
        case Errc::is_directory: return FsStatus::is_directory;
        case Errc::not_directory: return FsStatus::not_directory;
        case Errc::not_empty: return FsStatus::not_empty;
        case Errc::malformed_path: return FsStatus::malformed_path;
        default: return FsStatus::permission_denied;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Network

HttpOutcome Device::deliver(const Url& url, HttpMethod method, const std::string& body) {
    HttpOutcome out;
    if (!network_state_.connected) {
        out.detail = "network disconnected";
        return out;
    }
    Ipv4 address;
    if (auto literal = Ipv4::parse(url.host)) {
        address = *literal;
    } else {
        const ResolveResult r = dns_.resolve_and_pin(url.host, config_.pinning);
        if (r.pin_created) {
            emit(Actor::os(), "dns.pin", json{{"host", url.host}, {"address", r.pinned->to_string()}}, "pinned");
        }
        if (r.status == ResolveStatus::resolution_failure) {
            out.detail = "no address for " + url.host;
            return out;
        }
        if (r.status == ResolveStatus::pin_mismatch) {
            out.status = HttpStatus::denied_pin_mismatch;
            out.address = r.address;
            out.detail = url.host + " answered " + r.address->to_string() + ", pinned " + r.pinned->to_string();
            return out;
        }
        address = *r.address;
    }
    const StubServer& server = network_.server_at(address);
    network_.record(ReceivedRequest{address, url.host, url.path, method, body});
    out.status = HttpStatus::delivered;
    out.address = address;
    out.response_code = server.status;
    out.response_body = server.body;
    out.timing_ms = config_.latency_ms;
    return out;
}

void Device::record_http(std::string_view package, const Url& url, HttpMethod method, const std::string& route,
                         const std::string& via, const HttpOutcome& outcome) {
    json params{{"method", to_string(method)},
                {"url", url_text(url)},
                {"host", url.host},
                {"path", url.path},
                {"route", route},
                {"via", via},
                {"address", outcome.address ? json(outcome.address->to_string()) : json(nullptr)},
                {"pendingId", outcome.pending_id ? json(*outcome.pending_id) : json(nullptr)}};
    if (!outcome.detail.empty()) {
        params["detail"] = outcome.detail;
    }
    emit(actor_for(package), "http", std::move(params), std::string(to_string(outcome.status)));
}

HttpOutcome Device::http_request(std::string_view package, HttpMethod method, std::string_view url_str,
                                 std::string body) {
    const Url url = Url::parse(url_str);
    HttpOutcome out;
    out.status = HttpStatus::denied_no_grant;
    const AppInstance* app = grants_.find(package);
    if (app == nullptr) {
        out.detail = "unknown app";
        record_http(package, url, method, "none", "", out);
        return out;
    }

    // Apps holding INTERNET directly take the legacy route through the firewall.
    if (grants_.in_group(app->uid, catalog::kInternet)) {
        if (!os_permits(registry_, grants_, app->uid, catalog::kInternet, url.host)) {
            out.detail = url.host + " outside the INTERNET binding";
            record_http(package, url, method, "direct", "", out);
            return out;
        }
        const AccessRequest access{url.host, method, url.path, url_text(url), body};
        const FirewallEvaluation ev = firewall_.evaluate_access(package, access, clock_);
        switch (ev.verdict) {
            case FirewallVerdict::allow:
                out = deliver(url, method, body);
                break;
            case FirewallVerdict::block:
                out.status = HttpStatus::blocked_by_policy;
                break;
            case FirewallVerdict::fake:
                out.status = HttpStatus::fake_unreachable;
                break;
            case FirewallVerdict::pending:
                out.status = HttpStatus::pending;
                out.pending_id = ev.pending_id;
                suspended_.emplace(*ev.pending_id, SuspendedRequest{std::string(package), url, method, body});
                emit(Actor::os(), "firewall.pending", firewall_.find(*ev.pending_id)->to_json(), "pending");
                break;
        }
        record_http(package, url, method, "direct", "", out);
        return out;
    }

    const std::optional<ProxyRoute> route = route_call(store_, *app, catalog::kApiSelectiveHttp);
    if (!route) {
        out.detail = "no network permission";
        record_http(package, url, method, "none", "", out);
        return out;
    }
    const std::string& via = route->proxy->id;
    const AppInstance* proxy = grants_.find(via);
    if (url.host_is_ip()) {
        out.detail = "IP literals bypass the domain check";
    } else if (route->grant->params && !match_any(parse_patterns(*route->grant->params), url.host)) {
        out.detail = url.host + " not in the granted domains";
    } else if (proxy == nullptr || !os_permits(registry_, grants_, proxy->uid, catalog::kInternet, url.host)) {
        out.detail = "proxy lacks INTERNET";
    } else {
        out = deliver(url, method, body);
    }
    record_http(package, url, method, "proxy", via, out);
    return out;
}

bool Device::open_raw_socket(std::string_view package, Ipv4 address) {
    const bool sliced = firewall_.policy(package) != nullptr;
    const bool ok = !sliced && authorize_call(package, catalog::kApiSocketConnect) == CallVerdict::allow;
    json params{{"address", address.to_string()}};
    if (sliced) {
        params["detail"] = "raw sockets are closed under a slice policy";
    }
    emit(actor_for(package), "socket.open", std::move(params), ok ? "allow" : "deny");
    return ok;
}

void Device::set_rogue_overlay(std::map<std::string, Ipv4> mapping, bool active) {
    json hosts = json::object();
    for (const auto& [host, addr] : mapping) {
        hosts[host] = addr.to_string();
    }
    dns_.set_rogue_overlay(std::move(mapping), active);
    emit(Actor::op(), "dns.overlay", json{{"active", active}, {"hosts", hosts}}, active ? "active" : "inactive");
}

// ---------------------------------------------------------------------------
// Firewall

void Device::set_slice_policy(SlicePolicy policy) {
    const AppInstance* app = grants_.find(policy.app);
    if (app == nullptr) {
        throw Error(Errc::unknown_app, policy.app);
    }
    if (app->is_proxy || !app->holds(catalog::kInternet)) {
        throw Error(Errc::not_a_legacy_app, policy.app + " does not hold INTERNET directly");
    }
    json j = policy.to_json();
    firewall_.set_policy(std::move(policy));
    emit(Actor::op(), "firewall.policy", std::move(j), "set");
}

const HttpOutcome& Device::decide_pending(std::uint64_t id, Resolution action) {
    const PendingDecision& d = firewall_.decide_pending(id, action);
    emit(Actor::op(), "firewall.resolve", json{{"id", id}, {"app", d.app}, {"action", to_string(action)}},
         std::string(to_string(action)));
    auto node = suspended_.extract(id);
    const SuspendedRequest& req = node.mapped();
    HttpOutcome out;
    switch (action) {
        case Resolution::allow:
            out = deliver(req.url, req.method, req.body);
            break;
        case Resolution::block:
            out.status = HttpStatus::blocked_by_policy;
            break;
        case Resolution::fake:
            out.status = HttpStatus::fake_unreachable;
            break;
    }
    out.pending_id = id;
    record_http(req.package, req.url, req.method, "direct", "", out);
    return completed_.insert_or_assign(id, std::move(out)).first->second;
}

const HttpOutcome* Device::completed_request(std::uint64_t id) const {
    auto it = completed_.find(id);
    return it == completed_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Storage

FsOutcome Device::fs_access(std::string_view package, std::string_view path, FsOp op, std::string payload) {
    FsOutcome out;
    std::string root;
    std::string route = "none";
    std::string via;
    const AppInstance* app = grants_.find(package);
    if (app != nullptr && grants_.in_group(app->uid, catalog::kExternalStorage)) {
        root = std::string(kSdcardRoot);
        route = "direct";
    } else if (app != nullptr) {
        if (auto r = route_call(store_, *app, catalog::kApiSelectiveSdcard)) {
            root = sandbox_root(package);
            route = "proxy";
            via = r->proxy->id;
        }
    }

    if (root.empty()) {
        out.detail = "no storage permission";
    } else {
        try {
            out.path = canonicalize(root, path);
            const AppInstance* proxy = via.empty() ? nullptr : grants_.find(via);
            if (!via.empty() &&
                (proxy == nullptr || !os_permits(registry_, grants_, proxy->uid, catalog::kExternalStorage, out.path))) {
                throw Error(Errc::escape_error, "proxy lacks storage access");
            }
            switch (op) {
                case FsOp::read: out.data = fs_.read(out.path); break;
                case FsOp::write: fs_.write(out.path, std::move(payload)); break;
                case FsOp::mkdir: fs_.mkdir(out.path); break;
                case FsOp::list: out.entries = fs_.list(out.path); break;
                case FsOp::remove: fs_.remove(out.path); break;
            }
            out.status = FsStatus::ok;
        } catch (const Error& e) {
            out.status = fs_status_for(e.code());
            out.detail = e.what();
        }
    }
    emit(actor_for(package), "fs",
         json{{"op", to_string(op)}, {"path", path}, {"canonical", out.path}, {"root", root}, {"route", route},
              {"via", via}},
         std::string(to_string(out.status)));
    return out;
}

// ---------------------------------------------------------------------------
// Collect-Usage-Statistics

const AppInstance* Device::stats_proxy() const {
    const ProxyStore::DescriptorPtr d = store_.exposing(catalog::kCollectUsageStats);
    if (!d || !store_.is_installed(d->id)) {
        return nullptr;
    }
    return grants_.find(d->id);
}

StatOutcome Device::report_stat(std::string_view package, std::string_view event) {
    if (authorize_call(package, catalog::kApiReportStat) == CallVerdict::deny || stats_proxy() == nullptr) {
        emit(actor_for(package), "stats.report", json{{"app", package}, {"event", event}}, "deny");
        return StatOutcome::denied;
    }
    const StatEntry& e = stats_.push(std::string(package), std::string(event), clock_);
    emit(actor_for(package), "stats.report", json{{"app", package}, {"event", event}, {"seq", e.seq}},
         "buffered");
    if (network_state_.connected) {
        flush_stats();
    }
    return StatOutcome::buffered;
}

void Device::set_network_state(bool connected) {
    const bool was = network_state_.connected;
    network_state_.connected = connected;
    emit(Actor::op(), "network.state", json{{"connected", connected}}, connected ? "connected" : "disconnected");
    if (connected && !was) {
        flush_stats();
    }
}

void Device::flush_stats() {
    const AppInstance* proxy = stats_proxy();
    if (proxy == nullptr || stats_.front() == nullptr) {
        return;
    }
    if (!proxy_native_call(*proxy, catalog::kApiNetworkStateRead, json::object()) || !network_state_.connected) {
        return;
    }
    const std::string package = proxy->package;
    const std::string url = "http://" + config_.analytics_host + "/collect";
    while (network_state_.connected && stats_.front() != nullptr) {
        const StatEntry e = *stats_.front();
        const json payload{{"seq", e.seq}, {"app", e.app}, {"event", e.event}, {"timestamp", e.timestamp}};
        const HttpOutcome out = http_request(package, HttpMethod::post, url, payload.dump());
        json params{{"seq", e.seq}, {"app", e.app}, {"event", e.event}, {"host", config_.analytics_host},
                    {"address", out.address ? json(out.address->to_string()) : json(nullptr)}};
        if (out.status != HttpStatus::delivered) {
            emit(Actor{ActorKind::proxy, package}, "stats.deliver", std::move(params),
                 std::string(to_string(out.status)));
            break;
        }
        stats_.pop_delivered();
        emit(Actor{ActorKind::proxy, package}, "stats.deliver", std::move(params), "delivered");
    }
}

// ---------------------------------------------------------------------------
// Act-as-a-Phone

namespace {

const AppInstance* phone_proxy(const ProxyStore& store, const GrantTable& grants) {
    const ProxyStore::DescriptorPtr d = store.exposing(catalog::kActAsPhone);
    return d && store.is_installed(d->id) ? grants.find(d->id) : nullptr;
}

}  // namespace

std::optional<std::string> Device::incoming_call(std::string_view package) {
    const AppInstance* proxy = phone_proxy(store_, grants_);
    if (proxy == nullptr || authorize_call(package, catalog::kApiPhoneSession) == CallVerdict::deny) {
        return std::nullopt;  // no session, nothing woken, nothing logged
    }
    const std::string id = phones_.create(std::string(package)).id;
    proxy_native_call(*proxy, catalog::kApiScreenWake, json{{"session", id}});
    proxy_native_call(*proxy, catalog::kApiRing, json{{"session", id}});
    emit(actor_for(proxy->package), "phone.incoming", json{{"app", package}, {"session", id}}, "ringing");
    return id;
}

bool Device::answer_call(std::string_view package, std::string_view session) {
    if (authorize_call(package, catalog::kApiPhoneSession) == CallVerdict::deny) {
        emit(actor_for(package), "phone.answer", json{{"session", session}}, "deny");
        return false;
    }
    phones_.answer(package, session);
    emit(actor_for(package), "phone.answer", json{{"session", session}}, "connected");
    return true;
}

MicResult Device::start_mic_capture(std::string_view package, std::string_view session,
                                    const std::optional<std::string>& token) {
    json params{{"session", session}, {"token", token ? json(*token) : json(nullptr)}};
    const AppInstance* proxy = phone_proxy(store_, grants_);
    if (proxy == nullptr || authorize_call(package, catalog::kApiPhoneMic) == CallVerdict::deny) {
        emit(actor_for(package), "phone.mic", std::move(params), "deny");
        return {false, "no-grant"};
    }
    MicResult r;
    try {
        r = phones_.start_mic(package, session, token);
    } catch (const Error& e) {
        emit(actor_for(package), "phone.mic", std::move(params), std::string(to_string(e.code())));
        throw;
    }
    if (r.capturing) {
        proxy_native_call(*proxy, catalog::kApiMicCapture, json{{"session", session}, {"token", *token}});
        emit(actor_for(package), "phone.mic", std::move(params), "capturing");
    } else {
        params["reason"] = r.reason;
        emit(actor_for(package), "phone.mic", std::move(params), "deny");
    }
    return r;
}

bool Device::use_bluetooth(std::string_view package, std::string_view session) {
    const AppInstance* proxy = phone_proxy(store_, grants_);
    bool routed = false;
    if (proxy != nullptr && authorize_call(package, catalog::kApiPhoneBluetooth) == CallVerdict::allow) {
        routed = phones_.use_bluetooth(package, session);
        if (routed) {
            proxy_native_call(*proxy, catalog::kApiBluetoothRoute, json{{"session", session}});
        }
    }
    emit(actor_for(package), "phone.bluetooth", json{{"session", session}}, routed ? "routed" : "deny");
    return routed;
}

bool Device::hang_up(std::string_view package, std::string_view session) {
    if (authorize_call(package, catalog::kApiPhoneSession) == CallVerdict::deny) {
        emit(actor_for(package), "phone.end", json{{"session", session}}, "deny");
        return false;
    }
    phones_.hang_up(package, session);
    emit(actor_for(package), "phone.end", json{{"session", session}}, "ended");
    return true;
}

std::string Device::issue_user_action(std::string_view session) {
    const std::string id = phones_.issue_token(session, clock_).id;
    emit(Actor::op(), "user-action", json{{"session", session}, {"token", id}}, "issued");
    return id;
}

}  // namespace permesh
