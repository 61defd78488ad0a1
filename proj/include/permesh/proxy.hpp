#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "permesh/capability.hpp"

namespace permesh {

enum class ProxyKind { split, merge };
// Built-in proxies ship with the OS image; store proxies arrive from the
// "Proxies" store section. They behave identically.
enum class Provenance { store, builtin };

std::string_view to_string(ProxyKind kind) noexcept;
std::string_view to_string(Provenance provenance) noexcept;

struct ExposedPermission {
    std::string id;
    std::string label;
    std::string description;
    std::optional<ParamSchema> schema;
    friend bool operator==(const ExposedPermission&, const ExposedPermission&) = default;
};

struct ProxyDescriptor {
    std::string id;
    ProxyKind kind = ProxyKind::merge;
    ExposedPermission exposes;
    std::vector<Requirement> requirements;
    std::vector<std::string> api;
    int loc_estimate = 0;
    Provenance provenance = Provenance::store;

    bool exposes_api(std::string_view op) const;

    // Throws Error(invalid_descriptor).
    static ProxyDescriptor from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    friend bool operator==(const ProxyDescriptor&, const ProxyDescriptor&) = default;
};

ProxyDescriptor load_descriptor_file(const std::string& path);

// The local analog of the store's proxy section plus the set installed on
// the device. Descriptors are immutable once published; replacement swaps
// the shared pointer so readers holding the old one keep a consistent view.
class ProxyStore {
public:
    using DescriptorPtr = std::shared_ptr<const ProxyDescriptor>;

    // Throws cycle_detected, unknown_requirement, duplicate_exposed_id,
    // invalid_descriptor.
    void register_proxy(PermissionRegistry& registry, ProxyDescriptor descriptor);
    // Swaps in a new version exposing the same permission id. Throws
    // unknown_proxy, invalid_descriptor, cycle_detected, unknown_requirement.
    void replace_proxy(PermissionRegistry& registry, ProxyDescriptor descriptor);

    DescriptorPtr find(std::string_view id) const;
    DescriptorPtr exposing(std::string_view permission) const;
    std::vector<DescriptorPtr> available() const;

    void mark_installed(const std::string& id);
    void mark_uninstalled(std::string_view id);
    bool is_installed(std::string_view id) const { return installed_.contains(id); }
    const std::set<std::string, std::less<>>& installed() const noexcept { return installed_; }

    // Proxies a manifest needs that are not yet installed, in an order where
    // every proxy follows the proxies it is layered on. Throws unknown_proxy.
    std::vector<std::string> resolve_proxy_dependencies(const PermissionRegistry& registry,
                                                        const AppManifest& manifest) const;

private:
    void validate(const PermissionRegistry& registry, const ProxyDescriptor& d, bool replacing) const;

    std::map<std::string, DescriptorPtr, std::less<>> available_;
    std::set<std::string, std::less<>> installed_;
};

// Which proxy, through which of the caller's grants, serves an api op.
struct ProxyRoute {
    ProxyStore::DescriptorPtr proxy;
    const Grant* grant = nullptr;
};

std::optional<ProxyRoute> route_call(const ProxyStore& store, const AppInstance& caller, std::string_view op);

enum class CallVerdict { allow, deny };

// Allow iff `op` is in the api surface of a proxy whose permission the caller
// holds, or `op` is a native API whose permission the caller holds directly.
CallVerdict authorize_call(const PermissionRegistry& registry, const ProxyStore& store, const GrantTable& table,
                           const AppInstance* caller, std::string_view op);

}  // namespace permesh
