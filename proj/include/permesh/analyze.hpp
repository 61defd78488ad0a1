#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "permesh/capability.hpp"
#include "permesh/proxy.hpp"

namespace permesh {

struct AnalyzeOptions {
    std::vector<ProxyDescriptor> extra_proxies;  // published alongside the stock ones
    std::optional<AppManifest> compare;          // explicit proxied counterpart
    std::vector<std::string> domains;            // for the derived counterpart of INTERNET
};

struct ManifestSummary {
    AppManifest manifest;
    std::vector<std::string> prompt;
    Footprint footprint;
    std::vector<std::string> proxies_needed;
};

struct Comparison {
    bool derived = false;  // synthesized from the legacy manifest rather than supplied
    ManifestSummary proxied;
    std::vector<std::string> prompt_removed;
    std::vector<std::string> prompt_added;
    Footprint footprint_removed;
    Footprint footprint_added;
};

struct Analysis {
    ManifestSummary subject;
    std::optional<Comparison> comparison;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

// Throws the manifest validation errors (unknown_permission, invalid_parameter, ...).
Analysis analyze_manifest(const AppManifest& manifest, const AnalyzeOptions& options = {});

// The least-privilege counterpart of a legacy manifest: INTERNET becomes
// Domain-Selective Internet over `domains` (a placeholder when empty), and
// storage becomes the app folder.
AppManifest proxied_equivalent(const AppManifest& legacy, const std::vector<std::string>& domains);

std::string describe(const NativeGrant& grant);

}  // namespace permesh
