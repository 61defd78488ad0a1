#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "permesh/capability.hpp"
#include "permesh/device.hpp"
#include "permesh/proxy.hpp"

namespace permesh {

// What an action is expected to produce. `pinned`/`unpinned` override `any`
// for the matching DNS pinning mode.
struct Expectation {
    std::optional<std::string> any;
    std::optional<std::string> pinned;
    std::optional<std::string> unpinned;

    const std::optional<std::string>& for_mode(bool pinning) const;
    bool present() const { return any || pinned || unpinned; }
};

struct ScriptAction {
    std::string verb;
    nlohmann::json args = nlohmann::json::object();
    Expectation expect;
    std::vector<std::string> tolerate;  // app-visible failures the app recovers from
    std::string where;                  // JSON pointer into the scenario file
};

enum class AppStatus { idle, running, suspended, finished, failed };
std::string_view to_string(AppStatus s) noexcept;

struct ScenarioApp {
    AppManifest manifest;
    bool install = true;
    GrantDecision decision = GrantDecision::accept_all;
    std::map<std::string, GrantDecision, std::less<>> proxy_decisions;
    std::string expect_install = "installed";
    std::vector<ScriptAction> script;
    std::string where;
};

struct OperatorAction {
    std::int64_t at = 0;  // ms after scenario start
    std::string verb;
    nlohmann::json args = nlohmann::json::object();
    std::string where;
};

struct FinalAssertion {
    std::string check;
    nlohmann::json args = nlohmann::json::object();
    std::optional<bool> pinning;  // evaluated only in this DNS pinning mode
    std::string where;
};

struct Fixtures {
    nlohmann::json dns = nlohmann::json::object();
    nlohmann::json servers = nlohmann::json::object();
    std::optional<nlohmann::json> fs;
    std::vector<ProxyDescriptor> proxies;
    std::optional<bool> pinning;
    bool network = true;
    double latency_ms = 1.0;
    std::int64_t tick_ms = 1;
};

struct Scenario {
    std::string name;
    std::string description;
    Fixtures fixtures;
    std::vector<ScenarioApp> apps;
    std::vector<OperatorAction> operator_actions;
    std::vector<FinalAssertion> assertions;
};

// Throws Error(parse_error) naming the offending field as a JSON pointer.
// Relative manifest and descriptor paths resolve against `base_dir`.
Scenario parse_scenario(const nlohmann::json& j, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

struct RunOptions {
    std::optional<bool> pinning;  // overrides the fixture
    bool interactive = false;     // defer unscripted prompts instead of failing
    std::int64_t start_time_ms = 0;
};

struct AssertionResult {
    std::string where;
    std::string description;
    bool ok = false;
    std::string detail;
};

struct Report {
    std::string scenario;
    bool pass = false;
    bool pinning = true;
    std::vector<AssertionResult> results;
    std::vector<std::string> audit_violations;
    std::string error;  // run-level error such as unscripted-prompt
    std::map<std::string, std::string> app_status;
    std::string event_log;  // JSONL export

    const AssertionResult* first_failure() const;
    nlohmann::json to_json() const;
    std::string to_text() const;
};

enum class StepResult { progressed, waiting, done };

// Drives one scenario on its own Device. All access must be serialized by
// the caller; the control API holds a mutex around step() and device().
class ScenarioRunner {
public:
    ScenarioRunner(Scenario scenario, RunOptions options = {});
    ~ScenarioRunner();

    ScenarioRunner(const ScenarioRunner&) = delete;
    ScenarioRunner& operator=(const ScenarioRunner&) = delete;

    // One round-robin pass: due operator actions, then one action per
    // runnable app. `waiting` only occurs in interactive mode.
    StepResult step();
    // Steps to completion. In interactive mode stops at the first wait.
    StepResult run();
    bool done() const noexcept;

    Device& device() noexcept;
    const Device& device() const noexcept;
    const Scenario& scenario() const noexcept;
    Report report() const;

private:
    struct State;
    std::unique_ptr<State> state_;
};

Report run_scenario(const Scenario& scenario, const RunOptions& options = {});

// Re-derives the module invariants from the log alone. Empty when clean.
std::vector<std::string> audit_log(const std::vector<LogEntry>& entries);

}  // namespace permesh
