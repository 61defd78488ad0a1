#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "permesh/domain.hpp"
#include "permesh/net.hpp"

namespace permesh {

enum class DefaultAction { prompt, block, fake };
enum class FirewallVerdict { allow, block, fake, pending };
enum class Resolution { allow, block, fake };

std::string_view to_string(DefaultAction a) noexcept;
std::string_view to_string(FirewallVerdict v) noexcept;
std::string_view to_string(Resolution r) noexcept;
std::optional<DefaultAction> default_action_from_string(std::string_view s) noexcept;
std::optional<Resolution> resolution_from_string(std::string_view s) noexcept;

struct AccessRequest {
    std::string host;
    HttpMethod method = HttpMethod::get;
    std::string path;
    std::string url;
    std::string body;
};

// Operator-imposed sub-grant over a legacy app's full Internet access.
struct SlicePolicy {
    std::string app;
    std::vector<DomainPattern> allowed_domains;
    DefaultAction default_action = DefaultAction::prompt;

    nlohmann::json to_json() const;
};

struct PendingDecision {
    std::uint64_t id = 0;
    std::string app;
    AccessRequest access;
    std::int64_t created_at = 0;
    std::optional<Resolution> resolution;

    nlohmann::json to_json() const;
};

struct FirewallEvaluation {
    FirewallVerdict verdict = FirewallVerdict::allow;
    std::optional<std::uint64_t> pending_id;
};

class Firewall {
public:
    void set_policy(SlicePolicy policy);
    const SlicePolicy* policy(std::string_view app) const;
    void clear_policy(std::string_view app);
    std::vector<const SlicePolicy*> policies() const;

    // In-slice hosts are allowed; anything else gets the default action, and
    // a prompt enqueues a PendingDecision. Apps without a policy are allowed.
    FirewallEvaluation evaluate_access(std::string_view app, const AccessRequest& access, std::int64_t now);

    // Throws unknown_id, already_resolved. Resolves exactly one request.
    const PendingDecision& decide_pending(std::uint64_t id, Resolution action);

    const PendingDecision* find(std::uint64_t id) const;
    std::vector<const PendingDecision*> unresolved() const;
    std::vector<const PendingDecision*> all() const;

private:
    std::map<std::string, SlicePolicy, std::less<>> policies_;
    std::map<std::uint64_t, PendingDecision> decisions_;
    std::uint64_t next_id_ = 1;
};

}  // namespace permesh
