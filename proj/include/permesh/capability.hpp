#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace permesh {

using Uid = std::uint32_t;
inline constexpr Uid kFirstAppUid = 10000;

enum class PermissionKind { native, proxy_defined };

// What a permission's parameters denote. On a proxy-defined permission it
// also means "requests may carry parameters"; on a native permission it only
// tells the OS layer how to read a binding pushed down by a proxy.
enum class ParamKind {
    domain_patterns,  // list of DomainPattern strings supplied in the manifest
    app_folder,       // bound at install time to the app's sandbox root
};

std::string_view to_string(ParamKind kind) noexcept;
std::optional<ParamKind> param_kind_from_string(std::string_view s) noexcept;

struct ParamSchema {
    ParamKind kind;
    friend bool operator==(const ParamSchema&, const ParamSchema&) = default;
};

using ParamValues = std::vector<std::string>;
// nullopt means unrestricted.
using Binding = std::optional<ParamValues>;

struct Permission {
    std::string id;
    PermissionKind kind = PermissionKind::native;
    std::string label;
    std::string description;
    std::optional<ParamSchema> schema;
    std::string exposed_by;  // proxy id, proxy-defined permissions only
};

// How a proxy binds one of the permissions it requires.
struct Requirement {
    enum class Mode {
        unrestricted,  // no parameters
        fixed,         // the listed values
        passthrough,   // whatever the grantee of the exposed permission was bound to
    };
    std::string permission;
    Mode mode = Mode::unrestricted;
    ParamValues values;

    friend bool operator==(const Requirement&, const Requirement&) = default;
};

class PermissionRegistry {
public:
    // Throws duplicate_id, invalid_permission.
    const Permission& register_native_permission(std::string id, std::string label, std::string description,
                                                 std::optional<ParamSchema> schema = std::nullopt);

    // Native API operation ids are the OS-level calls a native grant unlocks.
    void register_native_api(std::string op, const std::string& permission);

    // Used by the proxy layer; the expansion rule is what resolve_footprint walks.
    void register_proxy_defined(Permission permission, std::vector<Requirement> expansion);
    void replace_proxy_defined(Permission permission, std::vector<Requirement> expansion);

    const Permission* find(std::string_view id) const;
    // Throws unknown_permission.
    const Permission& get(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    const std::vector<Requirement>& expansion(std::string_view id) const;
    // The native permission an API op belongs to, or nullptr for non-native ops.
    const Permission* native_for_api(std::string_view op) const;
    std::vector<std::string> native_apis(std::string_view permission) const;
    std::vector<std::string> all_native_apis() const;

    std::vector<const Permission*> all() const;

    // Throws invalid_parameter if the values do not fit the schema.
    void validate_params(const Permission& permission, const ParamValues& values) const;

private:
    std::map<std::string, Permission, std::less<>> permissions_;
    std::map<std::string, std::vector<Requirement>, std::less<>> expansions_;
    std::map<std::string, std::string, std::less<>> api_owner_;
};

struct PermissionRequest {
    std::string id;
    std::optional<ParamValues> params;
    friend bool operator==(const PermissionRequest&, const PermissionRequest&) = default;
};

struct AppManifest {
    std::string package;
    std::vector<PermissionRequest> permissions;
    std::vector<std::string> proxies;
    bool legacy = false;

    // Throws Error(invalid_manifest) on schema violations, including unknown fields.
    static AppManifest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    friend bool operator==(const AppManifest&, const AppManifest&) = default;
};

AppManifest load_manifest_file(const std::string& path);

struct Grant {
    std::string permission;
    Binding params;
    friend bool operator==(const Grant&, const Grant&) = default;
};

struct AppInstance {
    std::string package;
    Uid uid = 0;
    bool is_proxy = false;
    bool legacy = false;
    std::vector<Grant> grants;

    const Grant* find_grant(std::string_view permission) const;
    bool holds(std::string_view permission) const { return find_grant(permission) != nullptr; }
};

// The uid/usergroup table that every OS-level check reduces to.
class GrantTable {
public:
    // Throws duplicate_package. Assigns the next uid; uids are never reused.
    const AppInstance& add(std::string package, bool is_proxy, bool legacy, std::vector<Grant> grants);
    // Returns false if the package is not installed.
    bool remove(std::string_view package);

    const AppInstance* find(std::string_view package) const;
    const AppInstance* find(Uid uid) const;
    bool in_group(Uid uid, std::string_view permission) const;
    const Binding* binding(Uid uid, std::string_view permission) const;
    std::set<Uid> group(std::string_view permission) const;

    std::vector<const AppInstance*> installed() const;  // uid order
    Uid next_uid() const noexcept { return next_uid_; }

private:
    std::map<std::string, AppInstance, std::less<>> apps_;
    std::map<std::string, std::set<Uid>, std::less<>> groups_;
    std::map<std::pair<Uid, std::string>, Binding, std::less<>> params_;
    Uid next_uid_ = kFirstAppUid;
};

struct NativeGrant {
    std::string permission;
    Binding params;
    friend auto operator<=>(const NativeGrant&, const NativeGrant&) = default;
    friend bool operator==(const NativeGrant&, const NativeGrant&) = default;
};

using Footprint = std::set<NativeGrant>;

// Transitive expansion through proxy-defined permissions; bindings flow down
// through passthrough requirements and are replaced by fixed ones.
Footprint resolve_footprint(const PermissionRegistry& registry, std::string_view permission,
                            const Binding& params = std::nullopt);
Footprint footprint_of(const PermissionRegistry& registry, const AppInstance& app);

// Validated grants for a manifest, with install-time bindings applied.
// Throws unknown_permission, invalid_parameter, invalid_manifest.
std::vector<Grant> plan_grants(const PermissionRegistry& registry, const AppManifest& manifest);

enum class GrantDecision { accept_all, reject };

// Returns nullopt when the user rejects. Throws unknown_permission,
// missing_proxy, duplicate_package, invalid_parameter.
// `installed_proxies` lists proxy ids already on the device.
std::optional<AppInstance> install_app(const PermissionRegistry& registry, GrantTable& table,
                                       const AppManifest& manifest, GrantDecision decision,
                                       const std::set<std::string, std::less<>>& installed_proxies);

std::vector<std::string> render_install_prompt(const PermissionRegistry& registry, const AppManifest& manifest);
std::string render_grant(const Permission& permission, const Binding& params);

// OS-level enforcement: is the uid in the group of `permission` and does its
// binding cover `resource` (a hostname or a canonical path, by ParamKind)?
bool os_permits(const PermissionRegistry& registry, const GrantTable& table, Uid uid, std::string_view permission,
                std::string_view resource = {});

nlohmann::json to_json(const NativeGrant& grant);
nlohmann::json to_json(const Footprint& footprint);

}  // namespace permesh
