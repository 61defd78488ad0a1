#include <limits>
#include <map>
#include <set>

#include "permesh/catalog.hpp"
#include "permesh/scenario.hpp"
#include "permesh/vfs.hpp"

namespace permesh {

using nlohmann::json;

namespace {

using GrantMap = std::map<std::string, json, std::less<>>;  // permission id -> params

bool host_matches(const json& patterns, const std::string& host) {
    if (!patterns.is_array()) return true;  // unrestricted
    for (const json& p : patterns) {
        if (match_domain(DomainPattern::parse(p.get<std::string>()), host)) return true;
    }
    return false;
}

class Auditor {
public:
    void visit(const LogEntry& e);
    std::vector<std::string> violations;

private:
    void flag(const LogEntry& e, const std::string& what) {
        violations.push_back("seq " + std::to_string(e.seq) + " " + e.action + ": " + what);
    }
    const GrantMap* grants_of(const std::string& pkg) const {
        auto it = grants_.find(pkg);
        return it == grants_.end() ? nullptr : &it->second;
    }
    void on_http(const LogEntry& e);

    std::uint64_t last_seq_ = 0;
    std::int64_t last_time_ = std::numeric_limits<std::int64_t>::min();
    bool connected_ = true;
    std::map<std::string, GrantMap, std::less<>> grants_;
    std::map<std::string, json, std::less<>> policies_;  // app -> allowed patterns
    std::set<std::uint64_t> reported_;
    std::set<std::uint64_t> delivered_;
    std::uint64_t last_delivered_ = 0;
    std::map<std::string, std::string, std::less<>> pins_;
    std::set<std::uint64_t> pending_;
    std::map<std::uint64_t, std::string> resolved_;
    std::map<std::string, std::string, std::less<>> tokens_;  // token -> session
    std::set<std::string, std::less<>> used_tokens_;
};

void Auditor::on_http(const LogEntry& e) {
    const json& p = e.params;
    const std::string host = p.value("host", std::string());
    const std::string route = p.value("route", std::string());
    const bool is_ip = Ipv4::parse(host).has_value();
    const json& pending_id = p["pendingId"];

    if (!pending_id.is_null() && e.verdict != "pending") {
        auto it = resolved_.find(pending_id.get<std::uint64_t>());
        if (it == resolved_.end()) {
            flag(e, "outcome for pending " + pending_id.dump() + " before its resolution");
        } else if (e.verdict == "delivered" && it->second != "allow") {
            flag(e, "delivered after a " + it->second + " resolution");
        }
    }
    if (e.verdict != "delivered") return;

    if (!connected_) flag(e, "delivered while the network was down");
    if (!is_ip) {
        auto pin = pins_.find(host);
        if (pin != pins_.end() && p["address"] != pin->second) {
            flag(e, "delivered to " + p["address"].dump() + " but " + host + " is pinned to " + pin->second);
        }
    }
    const GrantMap* g = grants_of(e.actor.name);
    if (g == nullptr) {
        flag(e, "delivered for an uninstalled package");
        return;
    }
    if (route == "proxy") {
        const std::string via = p.value("via", std::string());
        const GrantMap* proxy = grants_of(via);
        if (proxy == nullptr || !proxy->contains(catalog::kInternet)) {
            flag(e, "proxy route via " + via + " without an installed INTERNET holder");
        }
        auto grant = g->find(catalog::kDomainSelective);
        if (grant == g->end()) {
            flag(e, "proxy route without the domain-selective grant");
        } else if (is_ip || !host_matches(grant->second, host)) {
            flag(e, host + " outside the granted domains");
        }
    } else if (route == "direct") {
        auto grant = g->find(catalog::kInternet);
        if (grant == g->end()) {
            flag(e, "direct route without INTERNET");
        } else if (!host_matches(grant->second, host)) {
            flag(e, host + " outside the INTERNET binding");
        }
        auto policy = policies_.find(e.actor.name);
        if (policy != policies_.end() && pending_id.is_null() && (is_ip || !host_matches(policy->second, host))) {
            flag(e, host + " outside the slice policy without an allow decision");
        }
    } else {
        flag(e, "delivered on route \"" + route + "\"");
    }
}

void Auditor::visit(const LogEntry& e) {
    if (e.seq != last_seq_ + 1) {
        flag(e, "seq gap after " + std::to_string(last_seq_));
    }
    if (e.time < last_time_) {
        flag(e, "time went backwards");
    }
    last_seq_ = e.seq;
    last_time_ = e.time;
    const json& p = e.params;

    if (e.action == "app.install" && e.verdict == "installed") {
        GrantMap& g = grants_[p["package"].get<std::string>()];
        for (const json& grant : p["grants"]) g[grant["id"].get<std::string>()] = grant["params"];
    } else if (e.action == "proxy.install" && e.verdict == "installed") {
        GrantMap& g = grants_[p["proxy"].get<std::string>()];
        for (const json& grant : p["grants"]) g[grant["id"].get<std::string>()] = grant["params"];
    } else if (e.action == "app.uninstall" || e.action == "proxy.uninstall") {
        grants_.erase(p["package"].get<std::string>());
        policies_.erase(p["package"].get<std::string>());
    } else if (e.action == "network.state") {
        connected_ = p["connected"].get<bool>();
    } else if (e.action == "firewall.policy") {
        policies_[p["app"].get<std::string>()] = p["allowedDomains"];
    } else if (e.action == "dns.pin") {
        const std::string host = p["host"].get<std::string>();
        if (!pins_.emplace(host, p["address"].get<std::string>()).second) {
            flag(e, host + " pinned twice");
        }
    } else if (e.action == "firewall.pending") {
        pending_.insert(p["id"].get<std::uint64_t>());
    } else if (e.action == "firewall.resolve") {
        const std::uint64_t id = p["id"].get<std::uint64_t>();
        if (!pending_.contains(id)) flag(e, "resolution for unknown pending " + std::to_string(id));
        if (!resolved_.emplace(id, e.verdict).second) flag(e, "pending " + std::to_string(id) + " resolved twice");
    } else if (e.action == "http") {
        on_http(e);
    } else if (e.action == "stats.report" && e.verdict == "buffered") {
        reported_.insert(p["seq"].get<std::uint64_t>());
    } else if (e.action == "stats.deliver" && e.verdict == "delivered") {
        const std::uint64_t seq = p["seq"].get<std::uint64_t>();
        if (!connected_) flag(e, "stat delivered while disconnected");
        if (!reported_.contains(seq)) flag(e, "stat " + std::to_string(seq) + " delivered but never reported");
        if (!delivered_.insert(seq).second) flag(e, "stat " + std::to_string(seq) + " delivered twice");
        if (seq <= last_delivered_) flag(e, "stat " + std::to_string(seq) + " delivered out of order");
        last_delivered_ = std::max(last_delivered_, seq);
        if (!match_domain(DomainPattern::parse(catalog::kAnalyticsPattern), p["host"].get<std::string>())) {
            flag(e, "stat delivered to " + p["host"].get<std::string>());
        }
    } else if (e.action == "native.call") {
        if (e.actor.kind != ActorKind::proxy) {
            flag(e, "native call issued by a non-proxy actor " + e.actor.name);
        }
        const GrantMap* g = grants_of(e.actor.name);
        const bool holds = g != nullptr && g->contains(p["permission"].get<std::string>());
        if ((e.verdict == "allow") != holds) {
            flag(e, "verdict " + e.verdict + " disagrees with the grant table");
        }
    } else if (e.action == "socket.open" && e.verdict == "allow") {
        const GrantMap* g = grants_of(e.actor.name);
        if (g == nullptr || !g->contains(catalog::kInternet)) flag(e, "raw socket without INTERNET");
        if (policies_.contains(e.actor.name)) flag(e, "raw socket under a slice policy");
    } else if (e.action == "fs" && e.verdict != "permission-denied" && e.verdict != "malformed-path") {
        const std::string root = p["root"].get<std::string>();
        const std::string canonical = p["canonical"].get<std::string>();
        if (!is_within(root, canonical)) flag(e, canonical + " escapes " + root);
        if (p["route"] == "proxy" && root != sandbox_root(e.actor.name)) {
            flag(e, "proxied storage rooted at " + root);
        }
        if (p["route"] == "direct") {
            const GrantMap* g = grants_of(e.actor.name);
            if (g == nullptr || !g->contains(catalog::kExternalStorage)) flag(e, "direct storage without the grant");
        }
    } else if (e.action == "user-action") {
        tokens_[p["token"].get<std::string>()] = p["session"].get<std::string>();
    } else if (e.action == "phone.mic" && e.verdict == "capturing") {
        const std::string token = p["token"].is_string() ? p["token"].get<std::string>() : "";
        auto it = tokens_.find(token);
        if (it == tokens_.end()) {
            flag(e, "mic active without a user-action token");
        } else if (it->second != p["session"].get<std::string>()) {
            flag(e, "token " + token + " belongs to " + it->second);
        }
        if (!used_tokens_.insert(token).second) flag(e, "token " + token + " used twice");
    }
}

}  // namespace

std::vector<std::string> audit_log(const std::vector<LogEntry>& entries) {
    Auditor a;
    for (const LogEntry& e : entries) {
        try {
            a.visit(e);
        } catch (const std::exception& ex) {
            a.violations.push_back("seq " + std::to_string(e.seq) + " " + e.action + ": malformed entry (" +
                                   ex.what() + ")");
        }
    }
    return a.violations;
}

}  // namespace permesh
