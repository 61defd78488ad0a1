#include "permesh/firewall.hpp"

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

std::string_view to_string(DefaultAction a) noexcept {
    switch (a) {
        case DefaultAction::prompt: return "prompt";
        case DefaultAction::block: return "block";
        case DefaultAction::fake: return "fake";
    }
    return "unknown";
}

std::string_view to_string(FirewallVerdict v) noexcept {
    switch (v) {
        case FirewallVerdict::allow: return "allow";
        case FirewallVerdict::block: return "block";
        case FirewallVerdict::fake: return "fake";
        case FirewallVerdict::pending: return "pending";
    }
    return "unknown";
}

std::string_view to_string(Resolution r) noexcept {
    switch (r) {
        case Resolution::allow: return "allow";
        case Resolution::block: return "block";
        case Resolution::fake: return "fake";
    }
    return "unknown";
}

std::optional<DefaultAction> default_action_from_string(std::string_view s) noexcept {
    if (s == "prompt") return DefaultAction::prompt;
    if (s == "block") return DefaultAction::block;
    if (s == "fake") return DefaultAction::fake;
    return std::nullopt;
}

std::optional<Resolution> resolution_from_string(std::string_view s) noexcept {
    if (s == "allow") return Resolution::allow;
    if (s == "block") return Resolution::block;
    if (s == "fake") return Resolution::fake;
    return std::nullopt;
}

json SlicePolicy::to_json() const {
    json domains = json::array();
    for (const auto& d : allowed_domains) {
        domains.push_back(d.normalized());
    }
    return json{{"app", app}, {"allowedDomains", domains}, {"defaultAction", to_string(default_action)}};
}

json PendingDecision::to_json() const {
    json j{{"id", id},
           {"app", app},
           {"host", access.host},
           {"method", to_string(access.method)},
           {"path", access.path},
           {"createdAt", created_at}};
    j["resolution"] = resolution ? json(to_string(*resolution)) : json(nullptr);
    return j;
}

void Firewall::set_policy(SlicePolicy policy) {
    std::string app = policy.app;
    policies_[app] = std::move(policy);
}

const SlicePolicy* Firewall::policy(std::string_view app) const {
    auto it = policies_.find(app);
    return it == policies_.end() ? nullptr : &it->second;
}

void Firewall::clear_policy(std::string_view app) {
    if (auto it = policies_.find(app); it != policies_.end()) {
        policies_.erase(it);
    }
}

std::vector<const SlicePolicy*> Firewall::policies() const {
    std::vector<const SlicePolicy*> out;
    for (const auto& entry : policies_) {
        out.push_back(&entry.second);
    }
    return out;
}

FirewallEvaluation Firewall::evaluate_access(std::string_view app, const AccessRequest& access, std::int64_t now) {
    const SlicePolicy* p = policy(app);
    if (p == nullptr || match_any(p->allowed_domains, access.host)) {
        return {FirewallVerdict::allow, std::nullopt};
    }
    switch (p->default_action) {
        case DefaultAction::block: return {FirewallVerdict::block, std::nullopt};
        case DefaultAction::fake: return {FirewallVerdict::fake, std::nullopt};
        case DefaultAction::prompt: break;
    }
    const std::uint64_t id = next_id_++;
    decisions_.emplace(id, PendingDecision{id, std::string(app), access, now, std::nullopt});
    return {FirewallVerdict::pending, id};
}

const PendingDecision& Firewall::decide_pending(std::uint64_t id, Resolution action) {
    auto it = decisions_.find(id);
    if (it == decisions_.end()) {
        throw Error(Errc::unknown_id, "pending decision " + std::to_string(id));
    }
    if (it->second.resolution) {
        throw Error(Errc::already_resolved, "pending decision " + std::to_string(id));
    }
    it->second.resolution = action;
    return it->second;
}

const PendingDecision* Firewall::find(std::uint64_t id) const {
    auto it = decisions_.find(id);
    return it == decisions_.end() ? nullptr : &it->second;
}

std::vector<const PendingDecision*> Firewall::unresolved() const {
    std::vector<const PendingDecision*> out;
    for (const auto& entry : decisions_) {
        if (!entry.second.resolution) {
            out.push_back(&entry.second);
        }
    }
    return out;
}

std::vector<const PendingDecision*> Firewall::all() const {
    std::vector<const PendingDecision*> out;
    for (const auto& entry : decisions_) {
        out.push_back(&entry.second);
    }
    return out;
}

}  // namespace permesh
