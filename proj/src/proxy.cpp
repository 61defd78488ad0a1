#include "permesh/proxy.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

std::string_view to_string(ProxyKind kind) noexcept {
    return kind == ProxyKind::split ? "split" : "merge";
}

std::string_view to_string(Provenance provenance) noexcept {
    return provenance == Provenance::builtin ? "builtin" : "store";
}

bool ProxyDescriptor::exposes_api(std::string_view op) const {
    return std::ranges::find(api, op) != api.end();
}

namespace {

[[noreturn]] void bad_descriptor(const std::string& what) {
    throw Error(Errc::invalid_descriptor, what);
}

void only_fields(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (const auto& item : obj.items()) {
        if (std::ranges::find(allowed, item.key()) == allowed.end()) {
            bad_descriptor(where + ": unknown field '" + item.key() + "'");
        }
    }
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string() || obj[key].get<std::string>().empty()) {
        bad_descriptor(where + "/" + key + ": required non-empty string");
    }
    return obj[key].get<std::string>();
}

bool is_string_array(const json& j) {
    return j.is_array() && std::ranges::all_of(j, [](const json& v) { return v.is_string(); });
}

}  // namespace

ProxyDescriptor ProxyDescriptor::from_json(const json& j) {
    if (!j.is_object()) {
        bad_descriptor("descriptor must be a JSON object");
    }
    only_fields(j, {"id", "kind", "exposes", "requires", "api", "loc", "provenance"}, "descriptor");

    ProxyDescriptor d;
    d.id = required_string(j, "id", "");
    const std::string kind = required_string(j, "kind", "");
    if (kind == "split") {
        d.kind = ProxyKind::split;
    } else if (kind == "merge") {
        d.kind = ProxyKind::merge;
    } else {
        bad_descriptor("/kind: expected \"split\" or \"merge\", got \"" + kind + "\"");
    }

    if (!j.contains("exposes") || !j["exposes"].is_object()) {
        bad_descriptor("/exposes: required object");
    }
    const json& ex = j["exposes"];
    only_fields(ex, {"id", "label", "description", "paramSchema"}, "/exposes");
    d.exposes.id = required_string(ex, "id", "/exposes");
    d.exposes.label = required_string(ex, "label", "/exposes");
    if (ex.contains("description")) {
        if (!ex["description"].is_string()) {
            bad_descriptor("/exposes/description: expected a string");
        }
        d.exposes.description = ex["description"].get<std::string>();
    }
    if (ex.contains("paramSchema")) {
        const json& schema = ex["paramSchema"];
        if (!schema.is_object()) {
            bad_descriptor("/exposes/paramSchema: expected an object");
        }
        only_fields(schema, {"type"}, "/exposes/paramSchema");
        const auto kind_value = param_kind_from_string(required_string(schema, "type", "/exposes/paramSchema"));
        if (!kind_value) {
            bad_descriptor("/exposes/paramSchema/type: expected \"domain-patterns\" or \"app-folder\"");
        }
        d.exposes.schema = ParamSchema{*kind_value};
    }

    if (!j.contains("requires") || !j["requires"].is_array()) {
        bad_descriptor("/requires: required array");
    }
    for (std::size_t i = 0; i < j["requires"].size(); ++i) {
        const std::string where = "/requires/" + std::to_string(i);
        const json& r = j["requires"][i];
        if (!r.is_object()) {
            bad_descriptor(where + ": expected an object");
        }
        only_fields(r, {"id", "params"}, where);
        Requirement req{required_string(r, "id", where), Requirement::Mode::unrestricted, {}};
        if (r.contains("params")) {
            const json& p = r["params"];
            if (p.is_string() && p.get<std::string>() == "passthrough") {
                req.mode = Requirement::Mode::passthrough;
            } else if (is_string_array(p)) {
                req.mode = Requirement::Mode::fixed;
                req.values = p.get<ParamValues>();
            } else {
                bad_descriptor(where + "/params: expected an array of strings or \"passthrough\"");
            }
        }
        d.requirements.push_back(std::move(req));
    }

    if (!j.contains("api") || !is_string_array(j["api"])) {
        bad_descriptor("/api: required array of operation ids");
    }
    d.api = j["api"].get<std::vector<std::string>>();

    if (j.contains("loc")) {
        if (!j["loc"].is_number_integer()) {
            bad_descriptor("/loc: expected an integer");
        }
        d.loc_estimate = j["loc"].get<int>();
    }
    if (j.contains("provenance")) {
        const json& p = j["provenance"];
        if (p == "builtin") {
            d.provenance = Provenance::builtin;
        } else if (p == "store") {
            d.provenance = Provenance::store;
        } else {
            bad_descriptor("/provenance: expected \"store\" or \"builtin\"");
        }
    }
    return d;
}

json ProxyDescriptor::to_json() const {
    json ex{{"id", exposes.id}, {"label", exposes.label}};
    if (!exposes.description.empty()) {
        ex["description"] = exposes.description;
    }
    if (exposes.schema) {
        ex["paramSchema"] = json{{"type", to_string(exposes.schema->kind)}};
    }
    json reqs = json::array();
    for (const Requirement& r : requirements) {
        json entry{{"id", r.permission}};
        if (r.mode == Requirement::Mode::passthrough) {
            entry["params"] = "passthrough";
        } else if (r.mode == Requirement::Mode::fixed) {
            entry["params"] = r.values;
        }
        reqs.push_back(std::move(entry));
    }
    return json{{"id", id},
                {"kind", to_string(kind)},
                {"exposes", ex},
                {"requires", reqs},
                {"api", api},
                {"loc", loc_estimate},
                {"provenance", to_string(provenance)}};
}

ProxyDescriptor load_descriptor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, path + ": cannot open file");
    }
    try {
        return ProxyDescriptor::from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// ProxyStore

namespace {

// Does expanding `from` ever reach `target`?
bool reaches(const PermissionRegistry& registry, const std::string& from, const std::string& target,
             std::set<std::string>& seen) {
    if (from == target) {
        return true;
    }
    if (!seen.insert(from).second) {
        return false;
    }
    for (const Requirement& r : registry.expansion(from)) {
        if (reaches(registry, r.permission, target, seen)) {
            return true;
        }
    }
    return false;
}

}  // namespace

void ProxyStore::validate(const PermissionRegistry& registry, const ProxyDescriptor& d, bool replacing) const {
    if (d.id.empty() || d.exposes.id.empty()) {
        throw Error(Errc::invalid_descriptor, "proxy and exposed permission ids must be non-empty");
    }
    if (d.exposes.label.empty()) {
        throw Error(Errc::invalid_descriptor, d.id + ": exposed permission needs a label");
    }
    if (d.requirements.empty()) {
        throw Error(Errc::invalid_descriptor, d.id + ": requires list is empty");
    }
    if (d.api.empty()) {
        throw Error(Errc::invalid_descriptor, d.id + ": api surface is empty");
    }
    for (const Requirement& r : d.requirements) {
        if (r.permission == d.exposes.id) {
            throw Error(Errc::cycle_detected, d.id + " requires its own permission " + r.permission);
        }
    }
    if (!replacing) {
        if (registry.contains(d.exposes.id)) {
            throw Error(Errc::duplicate_exposed_id, d.exposes.id);
        }
        if (available_.contains(d.id)) {
            throw Error(Errc::duplicate_exposed_id, "proxy " + d.id + " is already registered");
        }
    }

    std::set<std::string> required_ids;
    for (const Requirement& r : d.requirements) {
        const Permission* p = registry.find(r.permission);
        if (p == nullptr) {
            throw Error(Errc::unknown_requirement, d.id + " requires unregistered " + r.permission);
        }
        if (!required_ids.insert(r.permission).second) {
            throw Error(Errc::invalid_descriptor, d.id + " lists " + r.permission + " twice");
        }
        std::set<std::string> seen;
        if (replacing && reaches(registry, r.permission, d.exposes.id, seen)) {
            throw Error(Errc::cycle_detected, d.id + ": " + r.permission + " already depends on " + d.exposes.id);
        }
        if (r.mode == Requirement::Mode::passthrough && !d.exposes.schema) {
            throw Error(Errc::invalid_descriptor, d.id + ": passthrough needs a parameterized exposed permission");
        }
        if (r.mode == Requirement::Mode::fixed) {
            try {
                registry.validate_params(*p, r.values);
            } catch (const Error& e) {
                throw Error(Errc::invalid_descriptor, d.id + ": " + e.what());
            }
        }
        if (r.mode == Requirement::Mode::passthrough && p->schema && d.exposes.schema &&
            p->schema->kind != d.exposes.schema->kind) {
            throw Error(Errc::invalid_descriptor,
                        d.id + ": passthrough parameter kinds differ for " + r.permission);
        }
    }

    if (d.kind == ProxyKind::split) {
        if (d.requirements.size() != 1) {
            throw Error(Errc::invalid_descriptor, d.id + ": a split proxy requires exactly one permission");
        }
        if (!d.exposes.schema || d.requirements.front().mode != Requirement::Mode::passthrough) {
            throw Error(Errc::invalid_descriptor,
                        d.id + ": a split proxy must expose a parameter-narrowed form of what it requires");
        }
    } else if (d.requirements.size() < 2) {
        throw Error(Errc::invalid_descriptor, d.id + ": a merge proxy requires two or more permissions");
    }
}

void ProxyStore::register_proxy(PermissionRegistry& registry, ProxyDescriptor descriptor) {
    validate(registry, descriptor, false);
    Permission p{descriptor.exposes.id,           PermissionKind::proxy_defined, descriptor.exposes.label,
                 descriptor.exposes.description, descriptor.exposes.schema,     descriptor.id};
    registry.register_proxy_defined(std::move(p), descriptor.requirements);
    std::string id = descriptor.id;
    available_[id] = std::make_shared<const ProxyDescriptor>(std::move(descriptor));
}

void ProxyStore::replace_proxy(PermissionRegistry& registry, ProxyDescriptor descriptor) {
    DescriptorPtr old = exposing(descriptor.exposes.id);
    if (!old) {
        throw Error(Errc::unknown_proxy, "no proxy exposes " + descriptor.exposes.id);
    }
    if (descriptor.id != old->id && available_.contains(descriptor.id)) {
        throw Error(Errc::duplicate_exposed_id, "proxy " + descriptor.id + " is already registered");
    }
    validate(registry, descriptor, true);
    Permission p{descriptor.exposes.id,           PermissionKind::proxy_defined, descriptor.exposes.label,
                 descriptor.exposes.description, descriptor.exposes.schema,     descriptor.id};
    registry.replace_proxy_defined(std::move(p), descriptor.requirements);
    available_.erase(old->id);
    std::string id = descriptor.id;
    available_[id] = std::make_shared<const ProxyDescriptor>(std::move(descriptor));
}

ProxyStore::DescriptorPtr ProxyStore::find(std::string_view id) const {
    auto it = available_.find(id);
    return it == available_.end() ? nullptr : it->second;
}

ProxyStore::DescriptorPtr ProxyStore::exposing(std::string_view permission) const {
    for (const auto& entry : available_) {
        if (entry.second->exposes.id == permission) {
            return entry.second;
        }
    }
    return nullptr;
}

std::vector<ProxyStore::DescriptorPtr> ProxyStore::available() const {
    std::vector<DescriptorPtr> out;
    for (const auto& entry : available_) {
        out.push_back(entry.second);
    }
    return out;
}

void ProxyStore::mark_installed(const std::string& id) {
    if (!available_.contains(id)) {
        throw Error(Errc::unknown_proxy, id);
    }
    installed_.insert(id);
}

void ProxyStore::mark_uninstalled(std::string_view id) {
    if (auto it = installed_.find(id); it != installed_.end()) {
        installed_.erase(it);
    }
}

std::vector<std::string> ProxyStore::resolve_proxy_dependencies(const PermissionRegistry& registry,
                                                                const AppManifest& manifest) const {
    std::vector<std::string> roots;
    for (const std::string& id : manifest.proxies) {
        if (!available_.contains(id)) {
            throw Error(Errc::unknown_proxy, id);
        }
        roots.push_back(id);
    }
    for (const PermissionRequest& req : manifest.permissions) {
        const Permission* p = registry.find(req.id);
        if (p != nullptr && p->kind == PermissionKind::proxy_defined) {
            roots.push_back(p->exposed_by);
        }
    }

    std::vector<std::string> order;
    std::set<std::string> visited;
    std::function<void(const std::string&)> visit = [&](const std::string& id) {
        if (!visited.insert(id).second) {
            return;
        }
        const DescriptorPtr d = find(id);
        if (!d) {
            throw Error(Errc::unknown_proxy, id);
        }
        for (const Requirement& r : d->requirements) {
            const Permission* p = registry.find(r.permission);
            if (p != nullptr && p->kind == PermissionKind::proxy_defined) {
                visit(p->exposed_by);
            }
        }
        if (!is_installed(id)) {
            order.push_back(id);
        }
    };
    for (const std::string& id : roots) {
        visit(id);
    }
    return order;
}

// ---------------------------------------------------------------------------
// Interposition

std::optional<ProxyRoute> route_call(const ProxyStore& store, const AppInstance& caller, std::string_view op) {
    for (const Grant& g : caller.grants) {
        ProxyStore::DescriptorPtr proxy = store.exposing(g.permission);
        if (proxy && store.is_installed(proxy->id) && proxy->exposes_api(op)) {
            return ProxyRoute{std::move(proxy), &g};
        }
    }
    return std::nullopt;
}

CallVerdict authorize_call(const PermissionRegistry& registry, const ProxyStore& store, const GrantTable& table,
                           const AppInstance* caller, std::string_view op) {
    if (caller == nullptr) {
        return CallVerdict::deny;
    }
    if (route_call(store, *caller, op)) {
        return CallVerdict::allow;
    }
    const Permission* native = registry.native_for_api(op);
    if (native != nullptr && table.in_group(caller->uid, native->id)) {
        return CallVerdict::allow;
    }
    return CallVerdict::deny;
}

}  // namespace permesh
