#include "permesh/error.hpp"

namespace permesh {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::duplicate_id: return "duplicate-id";
        case Errc::unknown_permission: return "unknown-permission";
        case Errc::invalid_permission: return "invalid-permission";
        case Errc::invalid_parameter: return "invalid-parameter";
        case Errc::missing_proxy: return "missing-proxy";
        case Errc::duplicate_package: return "duplicate-package";
        case Errc::invalid_manifest: return "invalid-manifest";
        case Errc::cycle_detected: return "cycle-detected";
        case Errc::unknown_requirement: return "unknown-requirement";
        case Errc::duplicate_exposed_id: return "duplicate-exposed-id";
        case Errc::invalid_descriptor: return "invalid-descriptor";
        case Errc::unknown_proxy: return "unknown-proxy";
        case Errc::grant_rejected: return "grant-rejected";
        case Errc::malformed_pattern: return "malformed-pattern";
        case Errc::malformed_url: return "malformed-url";
        case Errc::resolution_failure: return "resolution-failure";
        case Errc::escape_error: return "escape-error";
        case Errc::malformed_path: return "malformed-path";
        case Errc::not_found: return "not-found";
        case Errc::is_directory: return "is-directory";
        case Errc::not_directory: return "not-directory";
        case Errc::not_empty: return "not-empty";
        case Errc::invalid_session: return "invalid-session";
        case Errc::token_replay: return "token-replay";
        case Errc::wrong_session_token: return "wrong-session-token";
        case Errc::not_a_legacy_app: return "not-a-legacy-app";
        case Errc::unknown_id: return "unknown-id";
        case Errc::already_resolved: return "already-resolved";
        case Errc::unknown_app: return "unknown-app";
        case Errc::parse_error: return "parse-error";
        case Errc::unscripted_prompt: return "unscripted-prompt";
    }
    return "unknown-error";
}

}  // namespace permesh
