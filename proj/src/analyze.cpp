#include "permesh/analyze.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "permesh/catalog.hpp"

namespace permesh {

using nlohmann::json;

namespace {

ManifestSummary summarize(const PermissionRegistry& registry, const ProxyStore& store, const AppManifest& m) {
    ManifestSummary s;
    s.manifest = m;
    AppInstance probe;
    probe.package = m.package;
    probe.legacy = m.legacy;
    probe.grants = plan_grants(registry, m);
    s.prompt = render_install_prompt(registry, m);
    s.footprint = footprint_of(registry, probe);
    s.proxies_needed = store.resolve_proxy_dependencies(registry, m);
    return s;
}

std::vector<std::string> minus(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> out;
    for (const std::string& s : a) {
        if (std::find(b.begin(), b.end(), s) == b.end()) out.push_back(s);
    }
    return out;
}

Footprint minus(const Footprint& a, const Footprint& b) {
    Footprint out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

json summary_json(const ManifestSummary& s) {
    return json{{"package", s.manifest.package},
                {"legacy", s.manifest.legacy},
                {"prompt", s.prompt},
                {"footprint", to_json(s.footprint)},
                {"proxies", s.proxies_needed}};
}

void summary_text(std::ostringstream& out, const ManifestSummary& s) {
    out << "package: " << s.manifest.package << (s.manifest.legacy ? " (legacy)" : "") << '\n';
    out << "install prompt:\n";
    for (const std::string& line : s.prompt) out << "  - " << line << '\n';
    out << "native footprint:\n";
    for (const NativeGrant& g : s.footprint) out << "  - " << describe(g) << '\n';
    if (!s.proxies_needed.empty()) {
        out << "proxies installed with it:\n";
        for (const std::string& p : s.proxies_needed) out << "  - " << p << '\n';
    }
}

}  // namespace

std::string describe(const NativeGrant& grant) {
    std::string s = grant.permission;
    if (!grant.params) return s + " (unrestricted)";
    s += " [";
    for (std::size_t i = 0; i < grant.params->size(); ++i) {
        if (i > 0) s += ", ";
        s += (*grant.params)[i];
    }
    return s + "]";
}

AppManifest proxied_equivalent(const AppManifest& legacy, const std::vector<std::string>& domains) {
    AppManifest m;
    m.package = legacy.package;
    for (const PermissionRequest& r : legacy.permissions) {
        if (r.id == catalog::kInternet) {
            m.permissions.push_back({std::string(catalog::kDomainSelective),
                                     domains.empty() ? ParamValues{"domains.to-be-chosen"} : ParamValues(domains)});
        } else if (r.id == catalog::kExternalStorage) {
            m.permissions.push_back({std::string(catalog::kSelectiveSdcard), std::nullopt});
        } else {
            m.permissions.push_back(r);
        }
    }
    return m;
}

Analysis analyze_manifest(const AppManifest& manifest, const AnalyzeOptions& options) {
    PermissionRegistry registry;
    ProxyStore store;
    catalog::seed(registry, store);
    for (const ProxyDescriptor& d : options.extra_proxies) {
        store.register_proxy(registry, d);
    }

    Analysis a;
    a.subject = summarize(registry, store, manifest);

    std::optional<AppManifest> counterpart = options.compare;
    bool derived = false;
    if (!counterpart && manifest.legacy) {
        counterpart = proxied_equivalent(manifest, options.domains);
        derived = true;
    }
    if (counterpart) {
        Comparison c;
        c.derived = derived;
        c.proxied = summarize(registry, store, *counterpart);
        c.prompt_removed = minus(a.subject.prompt, c.proxied.prompt);
        c.prompt_added = minus(c.proxied.prompt, a.subject.prompt);
        c.footprint_removed = minus(a.subject.footprint, c.proxied.footprint);
        c.footprint_added = minus(c.proxied.footprint, a.subject.footprint);
        a.comparison = std::move(c);
    }
    return a;
}

json Analysis::to_json() const {
    json j = summary_json(subject);
    if (comparison) {
        json removed = json::array();
        json added = json::array();
        for (const NativeGrant& g : comparison->footprint_removed) removed.push_back(describe(g));
        for (const NativeGrant& g : comparison->footprint_added) added.push_back(describe(g));
        j["comparison"] = json{{"derived", comparison->derived},
                               {"proxied", summary_json(comparison->proxied)},
                               {"promptRemoved", comparison->prompt_removed},
                               {"promptAdded", comparison->prompt_added},
                               {"footprintRemoved", removed},
                               {"footprintAdded", added}};
    }
    return j;
}

std::string Analysis::to_text() const {
    std::ostringstream out;
    summary_text(out, subject);
    if (comparison) {
        out << '\n'
            << "proxied equivalent" << (comparison->derived ? " (derived)" : "") << ":\n";
        summary_text(out, comparison->proxied);
        out << '\n' << "least-privilege diff:\n";
        for (const std::string& s : comparison->prompt_removed) out << "  - prompt: " << s << '\n';
        for (const std::string& s : comparison->prompt_added) out << "  + prompt: " << s << '\n';
        for (const NativeGrant& g : comparison->footprint_removed) out << "  - native: " << describe(g) << '\n';
        for (const NativeGrant& g : comparison->footprint_added) out << "  + native: " << describe(g) << '\n';
    }
    return out.str();
}

}  // namespace permesh
