#include "permesh/device.hpp"

#include <algorithm>

#include "permesh/catalog.hpp"
#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

namespace {

json grants_json(const std::vector<Grant>& grants) {
    json arr = json::array();
    for (const Grant& g : grants) {
        arr.push_back(json{{"id", g.permission}, {"params", g.params ? json(*g.params) : json(nullptr)}});
    }
    return arr;
}

}  // namespace

std::string_view to_string(FsStatus s) noexcept {
    switch (s) {
        case FsStatus::ok: return "ok";
        case FsStatus::permission_denied: return "permission-denied";
        case FsStatus::not_found: return "not-found";
        case FsStatus::is_directory: return "is-directory";
        case FsStatus::not_directory: return "not-directory";
        case FsStatus::not_empty: return "not-empty";
        case FsStatus::malformed_path: return "malformed-path";
    }
    return "unknown";
}

Device::Device(DeviceConfig config) : config_(std::move(config)), clock_(config_.start_time_ms) {
    if (config_.seed_catalog) {
        catalog::seed(registry_, store_);
        dns_.add_record(config_.analytics_host, Ipv4{{10, 0, 0, 40}});
    }
}

Actor Device::actor_for(std::string_view package) const {
    const AppInstance* a = grants_.find(package);
    return Actor{a != nullptr && a->is_proxy ? ActorKind::proxy : ActorKind::app, std::string(package)};
}

void Device::emit(Actor actor, std::string action, json params, std::string verdict) {
    if (config_.log_events) {
        log_.append(clock_, std::move(actor), std::move(action), std::move(params), std::move(verdict));
    }
}

void Device::note(Actor actor, std::string action, json params, std::string verdict) {
    emit(std::move(actor), std::move(action), std::move(params), std::move(verdict));
}

const Permission& Device::register_native_permission(std::string id, std::string label, std::string description,
                                                     std::optional<ParamSchema> schema) {
    const Permission& p =
        registry_.register_native_permission(std::move(id), std::move(label), std::move(description), schema);
    emit(Actor::os(), "permission.register", json{{"id", p.id}, {"kind", "native"}}, "registered");
    return p;
}

void Device::register_proxy(ProxyDescriptor descriptor) {
    const std::string id = descriptor.id;
    const std::string exposed = descriptor.exposes.id;
    store_.register_proxy(registry_, std::move(descriptor));
    emit(Actor::os(), "proxy.register", json{{"proxy", id}, {"exposes", exposed}}, "registered");
}

void Device::replace_proxy(ProxyDescriptor descriptor) {
    const ProxyStore::DescriptorPtr old = store_.exposing(descriptor.exposes.id);
    const bool was_installed = old && store_.is_installed(old->id);
    const std::string new_id = descriptor.id;
    store_.replace_proxy(registry_, std::move(descriptor));
    emit(Actor::os(), "proxy.replace", json{{"proxy", new_id}, {"replaced", old ? old->id : ""}}, "replaced");
    if (was_installed) {
        grants_.remove(old->id);
        store_.mark_uninstalled(old->id);
        install_proxy(new_id, GrantDecision::accept_all);
    }
}

std::optional<AppInstance> Device::install_proxy(std::string_view proxy_id, GrantDecision decision) {
    const ProxyStore::DescriptorPtr d = store_.find(proxy_id);
    if (!d) {
        throw Error(Errc::unknown_proxy, std::string(proxy_id));
    }
    if (const AppInstance* existing = grants_.find(proxy_id); existing != nullptr && store_.is_installed(proxy_id)) {
        return *existing;
    }
    std::vector<Grant> proxy_grants;
    for (const Requirement& r : d->requirements) {
        const Permission& p = registry_.get(r.permission);
        if (p.kind == PermissionKind::proxy_defined && !store_.is_installed(p.exposed_by)) {
            throw Error(Errc::missing_proxy, d->id + " is layered on uninstalled " + p.exposed_by);
        }
        Binding b;
        if (r.mode == Requirement::Mode::fixed) {
            b = r.values;
        }
        proxy_grants.push_back(Grant{r.permission, b});
    }
    if (decision == GrantDecision::reject) {
        emit(Actor::os(), "proxy.install", json{{"proxy", d->id}}, "rejected");
        return std::nullopt;
    }
    const AppInstance& inst = grants_.add(d->id, true, false, std::move(proxy_grants));
    store_.mark_installed(d->id);
    emit(Actor::os(), "proxy.install",
         json{{"proxy", d->id}, {"uid", inst.uid}, {"grants", grants_json(inst.grants)}}, "installed");
    return inst;
}

InstallResult Device::install(const AppManifest& manifest, GrantDecision decision,
                              const std::map<std::string, GrantDecision, std::less<>>& proxy_decisions) {
    // Validate before touching any state.
    plan_grants(registry_, manifest);
    if (grants_.find(manifest.package) != nullptr) {
        throw Error(Errc::duplicate_package, manifest.package);
    }
    InstallResult result;
    const std::vector<std::string> order = store_.resolve_proxy_dependencies(registry_, manifest);
    if (decision == GrantDecision::reject) {
        emit(Actor::os(), "app.install", json{{"package", manifest.package}}, "aborted");
        result.detail = "user rejected the requested permissions";
        return result;
    }
    for (const std::string& id : order) {
        auto it = proxy_decisions.find(id);
        const GrantDecision d = it == proxy_decisions.end() ? GrantDecision::accept_all : it->second;
        if (!install_proxy(id, d)) {
            emit(Actor::os(), "app.install", json{{"package", manifest.package}, {"rejectedProxy", id}},
                 "aborted");
            throw Error(Errc::grant_rejected, "proxy " + id + " was declined; " + manifest.package + " not installed");
        }
        result.proxies_installed.push_back(id);
    }

    std::optional<AppInstance> inst = install_app(registry_, grants_, manifest, decision, store_.installed());
    if (!inst) {
        emit(Actor::os(), "app.install", json{{"package", manifest.package}}, "aborted");
        result.detail = "user rejected the requested permissions";
        return result;
    }
    for (const Grant& g : inst->grants) {
        const Permission& p = registry_.get(g.permission);
        if (p.schema && p.schema->kind == ParamKind::app_folder && p.kind == PermissionKind::proxy_defined) {
            fs_.assign_app_root(manifest.package);
        }
    }
    result.installed = true;
    result.app = grants_.find(manifest.package);
    emit(Actor::os(), "app.install",
         json{{"package", manifest.package},
              {"uid", inst->uid},
              {"legacy", manifest.legacy},
              {"grants", grants_json(inst->grants)},
              {"proxies", result.proxies_installed}},
         "installed");
    return result;
}

bool Device::uninstall(std::string_view package) {
    const AppInstance* a = grants_.find(package);
    if (a == nullptr) {
        return false;
    }
    const bool is_proxy = a->is_proxy;
    const Uid uid = a->uid;
    grants_.remove(package);
    if (is_proxy) {
        store_.mark_uninstalled(package);
    }
    firewall_.clear_policy(package);
    emit(Actor::os(), is_proxy ? "proxy.uninstall" : "app.uninstall",
         json{{"package", package}, {"uid", uid}}, "removed");
    return true;
}

CallVerdict Device::authorize_call(std::string_view package, std::string_view op) const {
    return permesh::authorize_call(registry_, store_, grants_, grants_.find(package), op);
}

Footprint Device::footprint(std::string_view package) const {
    const AppInstance* a = grants_.find(package);
    return a == nullptr ? Footprint{} : footprint_of(registry_, *a);
}

bool Device::proxy_native_call(const AppInstance& proxy, std::string_view op, json params) {
    const Permission* native = registry_.native_for_api(op);
    const bool ok = native != nullptr && os_permits(registry_, grants_, proxy.uid, native->id);
    params["op"] = op;
    params["permission"] = native != nullptr ? native->id : "";
    emit(actor_for(proxy.package), "native.call", std::move(params), ok ? "allow" : "deny");
    return ok;
}

json Device::snapshot() const {
    json apps = json::array();
    for (const AppInstance* a : grants_.installed()) {
        apps.push_back(json{{"package", a->package},
                            {"uid", a->uid},
                            {"isProxy", a->is_proxy},
                            {"legacy", a->legacy},
                            {"grants", grants_json(a->grants)},
                            {"prompt",
                             [&] {
                                 json lines = json::array();
                                 for (const Grant& g : a->grants) {
                                     lines.push_back(render_grant(registry_.get(g.permission), g.params));
                                 }
                                 return lines;
                             }()},
                            {"footprint", to_json(footprint_of(registry_, *a))}});
    }
    json policies = json::array();
    for (const SlicePolicy* p : firewall_.policies()) {
        policies.push_back(p->to_json());
    }
    json sessions = json::array();
    for (const PhoneSession* s : phones_.sessions()) {
        sessions.push_back(s->to_json());
    }
    json proxies = json::array();
    for (const auto& d : store_.available()) {
        json entry = d->to_json();
        entry["installed"] = store_.is_installed(d->id);
        proxies.push_back(std::move(entry));
    }
    return json{{"time", clock_},
                {"apps", apps},
                {"proxies", proxies},
                {"policies", policies},
                {"network", json{{"connected", network_state_.connected}}},
                {"pinning", config_.pinning},
                {"stats",
                 json{{"reported", stats_.reported()}, {"flushed", stats_.flushed()}, {"buffered", stats_.buffered()}}},
                {"pending", firewall_.unresolved().size()},
                {"sessions", sessions},
                {"lastSeq", log_.last_seq()}};
}

}  // namespace permesh
