#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace permesh {

// Failure kinds raised by operations whose contract lists them as errors.
// Outcomes that are part of normal mediation (deny, block, fake) are results,
// not errors, and never show up here.
enum class Errc {
    duplicate_id,
    unknown_permission,
    invalid_permission,
    invalid_parameter,
    missing_proxy,
    duplicate_package,
    invalid_manifest,
    cycle_detected,
    unknown_requirement,
    duplicate_exposed_id,
    invalid_descriptor,
    unknown_proxy,
    grant_rejected,
    malformed_pattern,
    malformed_url,
    resolution_failure,
    escape_error,
    malformed_path,
    not_found,
    is_directory,
    not_directory,
    not_empty,
    invalid_session,
    token_replay,
    wrong_session_token,
    not_a_legacy_app,
    unknown_id,
    already_resolved,
    unknown_app,
    parse_error,
    unscripted_prompt,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace permesh
