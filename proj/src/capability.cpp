#include "permesh/capability.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "permesh/domain.hpp"
#include "permesh/error.hpp"
#include "permesh/vfs.hpp"

namespace permesh {

using nlohmann::json;

std::string_view to_string(ParamKind kind) noexcept {
    switch (kind) {
        case ParamKind::domain_patterns: return "domain-patterns";
        case ParamKind::app_folder: return "app-folder";
    }
    return "unknown";
}

std::optional<ParamKind> param_kind_from_string(std::string_view s) noexcept {
    if (s == "domain-patterns") return ParamKind::domain_patterns;
    if (s == "app-folder") return ParamKind::app_folder;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// PermissionRegistry

const Permission& PermissionRegistry::register_native_permission(std::string id, std::string label,
                                                                  std::string description,
                                                                  std::optional<ParamSchema> schema) {
    if (id.empty()) {
        throw Error(Errc::invalid_permission, "permission id is empty");
    }
    if (label.empty()) {
        throw Error(Errc::invalid_permission, id + ": label is empty");
    }
    if (permissions_.contains(id)) {
        throw Error(Errc::duplicate_id, id);
    }
    Permission p{id, PermissionKind::native, std::move(label), std::move(description), schema, {}};
    return permissions_.emplace(std::move(id), std::move(p)).first->second;
}

void PermissionRegistry::register_native_api(std::string op, const std::string& permission) {
    const Permission& p = get(permission);
    if (p.kind != PermissionKind::native) {
        throw Error(Errc::invalid_permission, op + ": native APIs attach to native permissions only");
    }
    if (api_owner_.contains(op)) {
        throw Error(Errc::duplicate_id, "native api " + op);
    }
    api_owner_.emplace(std::move(op), permission);
}

void PermissionRegistry::register_proxy_defined(Permission permission, std::vector<Requirement> expansion) {
    if (permission.label.empty()) {
        throw Error(Errc::invalid_permission, permission.id + ": label is empty");
    }
    if (permissions_.contains(permission.id)) {
        throw Error(Errc::duplicate_exposed_id, permission.id);
    }
    permission.kind = PermissionKind::proxy_defined;
    expansions_[permission.id] = std::move(expansion);
    std::string id = permission.id;
    permissions_.emplace(std::move(id), std::move(permission));
}

void PermissionRegistry::replace_proxy_defined(Permission permission, std::vector<Requirement> expansion) {
    auto it = permissions_.find(permission.id);
    if (it == permissions_.end() || it->second.kind != PermissionKind::proxy_defined) {
        throw Error(Errc::unknown_permission, permission.id);
    }
    permission.kind = PermissionKind::proxy_defined;
    expansions_[permission.id] = std::move(expansion);
    it->second = std::move(permission);
}

const Permission* PermissionRegistry::find(std::string_view id) const {
    auto it = permissions_.find(id);
    return it == permissions_.end() ? nullptr : &it->second;
}

const Permission& PermissionRegistry::get(std::string_view id) const {
    if (const Permission* p = find(id)) {
        return *p;
    }
    throw Error(Errc::unknown_permission, std::string(id));
}

const std::vector<Requirement>& PermissionRegistry::expansion(std::string_view id) const {
    static const std::vector<Requirement> none;
    auto it = expansions_.find(id);
    return it == expansions_.end() ? none : it->second;
}

const Permission* PermissionRegistry::native_for_api(std::string_view op) const {
    auto it = api_owner_.find(op);
    return it == api_owner_.end() ? nullptr : find(it->second);
}

std::vector<std::string> PermissionRegistry::native_apis(std::string_view permission) const {
    std::vector<std::string> out;
    for (const auto& [op, owner] : api_owner_) {
        if (owner == permission) {
            out.push_back(op);
        }
    }
    return out;
}

std::vector<std::string> PermissionRegistry::all_native_apis() const {
    std::vector<std::string> out;
    for (const auto& entry : api_owner_) {
        out.push_back(entry.first);
    }
    return out;
}

std::vector<const Permission*> PermissionRegistry::all() const {
    std::vector<const Permission*> out;
    for (const auto& entry : permissions_) {
        out.push_back(&entry.second);
    }
    return out;
}

void PermissionRegistry::validate_params(const Permission& permission, const ParamValues& values) const {
    if (!permission.schema) {
        throw Error(Errc::invalid_parameter, permission.id + " takes no parameters");
    }
    switch (permission.schema->kind) {
        case ParamKind::domain_patterns:
            if (values.empty()) {
                throw Error(Errc::invalid_parameter, permission.id + " needs at least one domain pattern");
            }
            for (const auto& v : values) {
                try {
                    DomainPattern::parse(v);
                } catch (const Error& e) {
                    throw Error(Errc::invalid_parameter, permission.id + ": " + e.what());
                }
            }
            break;
        case ParamKind::app_folder:
            for (const auto& v : values) {
                if (!is_within(kSdcardRoot, v)) {
                    throw Error(Errc::invalid_parameter, permission.id + ": folder outside the SD card: " + v);
                }
            }
            break;
    }
}

// ---------------------------------------------------------------------------
// AppManifest

namespace {

[[noreturn]] void bad_manifest(const std::string& what) {
    throw Error(Errc::invalid_manifest, what);
}

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::ranges::find(allowed, key) == allowed.end()) {
            bad_manifest(where + ": unknown field '" + key + "'");
        }
    }
}

}  // namespace

AppManifest AppManifest::from_json(const json& j) {
    if (!j.is_object()) {
        bad_manifest("manifest must be a JSON object");
    }
    reject_unknown_fields(j, {"package", "permissions", "proxies", "legacy"}, "manifest");

    AppManifest m;
    if (!j.contains("package") || !j["package"].is_string() || j["package"].get<std::string>().empty()) {
        bad_manifest("/package: required non-empty string");
    }
    m.package = j["package"].get<std::string>();

    if (j.contains("permissions")) {
        const json& perms = j["permissions"];
        if (!perms.is_array()) {
            bad_manifest("/permissions: expected an array");
        }
        for (std::size_t i = 0; i < perms.size(); ++i) {
            const std::string where = "/permissions/" + std::to_string(i);
            const json& entry = perms[i];
            if (!entry.is_object()) {
                bad_manifest(where + ": expected an object");
            }
            reject_unknown_fields(entry, {"id", "params"}, where);
            if (!entry.contains("id") || !entry["id"].is_string()) {
                bad_manifest(where + "/id: required string");
            }
            PermissionRequest req{entry["id"].get<std::string>(), std::nullopt};
            if (entry.contains("params")) {
                const json& params = entry["params"];
                if (!params.is_array() ||
                    !std::ranges::all_of(params, [](const json& v) { return v.is_string(); })) {
                    bad_manifest(where + "/params: expected an array of strings");
                }
                req.params = params.get<ParamValues>();
            }
            m.permissions.push_back(std::move(req));
        }
    }

    if (j.contains("proxies")) {
        const json& proxies = j["proxies"];
        if (!proxies.is_array() || !std::ranges::all_of(proxies, [](const json& v) { return v.is_string(); })) {
            bad_manifest("/proxies: expected an array of strings");
        }
        m.proxies = proxies.get<std::vector<std::string>>();
    }

    if (j.contains("legacy")) {
        if (!j["legacy"].is_boolean()) {
            bad_manifest("/legacy: expected a boolean");
        }
        m.legacy = j["legacy"].get<bool>();
    }
    return m;
}

json AppManifest::to_json() const {
    json perms = json::array();
    for (const auto& p : permissions) {
        json entry{{"id", p.id}};
        if (p.params) {
            entry["params"] = *p.params;
        }
        perms.push_back(std::move(entry));
    }
    return json{{"package", package}, {"permissions", perms}, {"proxies", proxies}, {"legacy", legacy}};
}

AppManifest load_manifest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, path + ": cannot open file");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, path + ": " + e.what());
    }
    return AppManifest::from_json(j);
}

// ---------------------------------------------------------------------------
// GrantTable

const Grant* AppInstance::find_grant(std::string_view permission) const {
    auto it = std::ranges::find(grants, permission, &Grant::permission);
    return it == grants.end() ? nullptr : &*it;
}

const AppInstance& GrantTable::add(std::string package, bool is_proxy, bool legacy, std::vector<Grant> grants) {
    if (apps_.contains(package)) {
        throw Error(Errc::duplicate_package, package);
    }
    AppInstance app{package, next_uid_++, is_proxy, legacy, std::move(grants)};
    for (const Grant& g : app.grants) {
        groups_[g.permission].insert(app.uid);
        params_[{app.uid, g.permission}] = g.params;
    }
    return apps_.emplace(std::move(package), std::move(app)).first->second;
}

bool GrantTable::remove(std::string_view package) {
    auto it = apps_.find(package);
    if (it == apps_.end()) {
        return false;
    }
    for (const Grant& g : it->second.grants) {
        groups_[g.permission].erase(it->second.uid);
        params_.erase({it->second.uid, g.permission});
    }
    apps_.erase(it);
    return true;
}

const AppInstance* GrantTable::find(std::string_view package) const {
    auto it = apps_.find(package);
    return it == apps_.end() ? nullptr : &it->second;
}

const AppInstance* GrantTable::find(Uid uid) const {
    for (const auto& entry : apps_) {
        if (entry.second.uid == uid) {
            return &entry.second;
        }
    }
    return nullptr;
}

bool GrantTable::in_group(Uid uid, std::string_view permission) const {
    auto it = groups_.find(permission);
    return it != groups_.end() && it->second.contains(uid);
}

const Binding* GrantTable::binding(Uid uid, std::string_view permission) const {
    auto it = params_.find(std::pair<Uid, std::string>{uid, std::string(permission)});
    return it == params_.end() ? nullptr : &it->second;
}

std::set<Uid> GrantTable::group(std::string_view permission) const {
    auto it = groups_.find(permission);
    return it == groups_.end() ? std::set<Uid>{} : it->second;
}

std::vector<const AppInstance*> GrantTable::installed() const {
    std::vector<const AppInstance*> out;
    for (const auto& entry : apps_) {
        out.push_back(&entry.second);
    }
    std::ranges::sort(out, {}, &AppInstance::uid);
    return out;
}

// ---------------------------------------------------------------------------
// Footprints and install

Footprint resolve_footprint(const PermissionRegistry& registry, std::string_view permission, const Binding& params) {
    const Permission& p = registry.get(permission);
    if (p.kind == PermissionKind::native) {
        return {NativeGrant{p.id, params}};
    }
    Footprint out;
    for (const Requirement& req : registry.expansion(p.id)) {
        Binding child;
        switch (req.mode) {
            case Requirement::Mode::unrestricted: break;
            case Requirement::Mode::fixed: child = req.values; break;
            case Requirement::Mode::passthrough: child = params; break;
        }
        out.merge(resolve_footprint(registry, req.permission, child));
    }
    return out;
}

Footprint footprint_of(const PermissionRegistry& registry, const AppInstance& app) {
    Footprint out;
    for (const Grant& g : app.grants) {
        out.merge(resolve_footprint(registry, g.permission, g.params));
    }
    return out;
}

std::vector<Grant> plan_grants(const PermissionRegistry& registry, const AppManifest& manifest) {
    if (manifest.package.empty()) {
        throw Error(Errc::invalid_manifest, "package is empty");
    }
    std::vector<Grant> grants;
    for (const PermissionRequest& req : manifest.permissions) {
        const Permission& p = registry.get(req.id);
        if (std::ranges::find(grants, req.id, &Grant::permission) != grants.end()) {
            throw Error(Errc::invalid_manifest, manifest.package + " requests " + req.id + " twice");
        }
        if (manifest.legacy && p.kind != PermissionKind::native) {
            throw Error(Errc::invalid_manifest,
                        manifest.package + " is marked legacy but requests proxy-defined " + req.id);
        }
        Grant g{p.id, std::nullopt};
        const bool parameterized = p.kind == PermissionKind::proxy_defined && p.schema.has_value();
        if (req.params) {
            if (!parameterized || p.schema->kind == ParamKind::app_folder) {
                throw Error(Errc::invalid_parameter, req.id + " does not accept parameters in a manifest");
            }
            registry.validate_params(p, *req.params);
            ParamValues normalized;
            for (const auto& v : *req.params) {
                normalized.push_back(DomainPattern::parse(v).normalized());
            }
            g.params = std::move(normalized);
        } else if (parameterized) {
            if (p.schema->kind == ParamKind::domain_patterns) {
                throw Error(Errc::invalid_parameter, req.id + " requires a list of domain patterns");
            }
            g.params = ParamValues{sandbox_root(manifest.package)};
        }
        grants.push_back(std::move(g));
    }
    return grants;
}

std::optional<AppInstance> install_app(const PermissionRegistry& registry, GrantTable& table,
                                       const AppManifest& manifest, GrantDecision decision,
                                       const std::set<std::string, std::less<>>& installed_proxies) {
    std::vector<Grant> grants = plan_grants(registry, manifest);
    for (const std::string& proxy : manifest.proxies) {
        if (!installed_proxies.contains(proxy)) {
            throw Error(Errc::missing_proxy, manifest.package + " needs proxy " + proxy);
        }
    }
    for (const Grant& g : grants) {
        const Permission& p = registry.get(g.permission);
        if (p.kind == PermissionKind::proxy_defined && !installed_proxies.contains(p.exposed_by)) {
            throw Error(Errc::missing_proxy, g.permission + " is exposed by uninstalled proxy " + p.exposed_by);
        }
    }
    if (table.find(manifest.package) != nullptr) {
        throw Error(Errc::duplicate_package, manifest.package);
    }
    if (decision == GrantDecision::reject) {
        return std::nullopt;
    }
    return table.add(manifest.package, false, manifest.legacy, std::move(grants));
}

std::string render_grant(const Permission& permission, const Binding& params) {
    std::string line = permission.label;
    if (!params || params->empty()) {
        return line;
    }
    const bool folder = permission.schema && permission.schema->kind == ParamKind::app_folder;
    if (folder) {
        line += " (" + params->front() + ")";
        return line;
    }
    for (std::size_t i = 0; i < params->size(); ++i) {
        line += (i == 0 ? " \"" : ", \"") + (*params)[i] + "\"";
    }
    return line;
}

std::vector<std::string> render_install_prompt(const PermissionRegistry& registry, const AppManifest& manifest) {
    std::vector<std::string> lines;
    for (const Grant& g : plan_grants(registry, manifest)) {
        lines.push_back(render_grant(registry.get(g.permission), g.params));
    }
    return lines;
}

bool os_permits(const PermissionRegistry& registry, const GrantTable& table, Uid uid, std::string_view permission,
                std::string_view resource) {
    if (!table.in_group(uid, permission)) {
        return false;
    }
    const Binding* b = table.binding(uid, permission);
    if (b == nullptr || !b->has_value() || resource.empty()) {
        return true;
    }
    const Permission* p = registry.find(permission);
    if (p == nullptr || !p->schema) {
        return false;
    }
    switch (p->schema->kind) {
        case ParamKind::domain_patterns:
            return std::ranges::any_of(**b, [&](const std::string& v) {
                return match_domain(DomainPattern::parse(v), resource);
            });
        case ParamKind::app_folder:
            return std::ranges::any_of(**b, [&](const std::string& v) { return is_within(v, resource); });
    }
    return false;
}

json to_json(const NativeGrant& grant) {
    json j{{"id", grant.permission}};
    j["params"] = grant.params ? json(*grant.params) : json(nullptr);
    return j;
}

json to_json(const Footprint& footprint) {
    json arr = json::array();
    for (const auto& g : footprint) {
        arr.push_back(to_json(g));
    }
    return arr;
}

}  // namespace permesh
