#pragma once

#include <memory>
#include <string>

#include "json.hpp"
#include "permesh/scenario.hpp"

namespace permesh {

struct ControlApiOptions {
    std::string host = "127.0.0.1";
    int port = 7750;             // 0 picks a free port
    std::string token;           // when set, required in X-Permesh-Token
    std::string static_dir;      // served at "/" when set
    std::string scenario_root = ".";  // base for relative /v1/scenario/start paths
    RunOptions run = [] {
        RunOptions r;
        r.interactive = true;
        return r;
    }();
};

// Loopback HTTP front for one simulation session. A background runner
// thread steps the loaded scenario; handlers and the runner share one mutex.
class ControlApi {
public:
    explicit ControlApi(ControlApiOptions options = {});
    ~ControlApi();

    ControlApi(const ControlApi&) = delete;
    ControlApi& operator=(const ControlApi&) = delete;

    // False when the address is unavailable.
    bool bind();
    int port() const noexcept;

    // Serves on a background thread; bind() first.
    void start();
    // Serves on the calling thread until stop().
    void serve();
    void stop();

    // Replaces the session. Throws Error(parse_error) for bad files.
    void load_scenario_file(const std::string& path, const nlohmann::json& overrides = nlohmann::json::object());
    void load(Scenario scenario, RunOptions run);

    // Blocks until the session's runner is done or waiting, or the timeout passes.
    bool wait_idle(int timeout_ms);
    std::string event_log() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace permesh
