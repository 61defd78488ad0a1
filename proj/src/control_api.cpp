#include "permesh/control_api.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& detail) {
    reply(res, status, json{{"error", code}, {"detail", detail}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) {
            reply_error(res, 400, "parse-error", "expected a JSON object");
            return std::nullopt;
        }
        return j;
    } catch (const json::parse_error& e) {
        reply_error(res, 400, "parse-error", e.what());
        return std::nullopt;
    }
}

}  // namespace

struct ControlApi::Impl {
    ControlApiOptions options;
    httplib::Server server;
    int bound_port = -1;
    std::thread listener;

    mutable std::mutex mu;
    std::condition_variable changed;
    std::unique_ptr<ScenarioRunner> runner;
    StepResult last = StepResult::done;
    std::uint64_t session = 0;
    bool stopping = false;
    std::thread worker;

    explicit Impl(ControlApiOptions o) : options(std::move(o)) {
        Scenario idle;
        idle.name = "idle";
        install(std::move(idle), options.run);
        routes();
        worker = std::thread([this] { run_loop(); });
    }

    ~Impl() {
        {
            std::lock_guard lock(mu);
            stopping = true;
        }
        changed.notify_all();
        server.stop();
        if (listener.joinable()) listener.join();
        if (worker.joinable()) worker.join();
    }

    // Caller holds `mu`.
    void install(Scenario scenario, const RunOptions& run) {
        runner = std::make_unique<ScenarioRunner>(std::move(scenario), run);
        last = StepResult::progressed;
        ++session;
    }

    void run_loop() {
        std::unique_lock lock(mu);
        while (!stopping) {
            if (runner && last == StepResult::progressed) {
                last = runner->step();
                changed.notify_all();
                // Let handlers in between passes.
                lock.unlock();
                std::this_thread::yield();
                lock.lock();
                continue;
            }
            changed.wait_for(lock, std::chrono::milliseconds(50));
        }
    }

    // Caller holds `mu`; wakes the runner after an operator write.
    void poke() {
        if (last == StepResult::waiting) last = StepResult::progressed;
        changed.notify_all();
    }

    std::string status() const {
        switch (last) {
            case StepResult::progressed: return "running";
            case StepResult::waiting: return "waiting";
            case StepResult::done: return "done";
        }
        return "running";
    }

    bool authorized(const httplib::Request& req, httplib::Response& res) const {
        if (options.token.empty() || req.get_header_value("X-Permesh-Token") == options.token) {
            return true;
        }
        reply_error(res, 401, "unauthorized", "missing or wrong X-Permesh-Token");
        return false;
    }

    void routes() {
        // SO_REUSEPORT (httplib's default) would let a second server share the port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        if (!options.static_dir.empty()) {
            server.set_mount_point("/", options.static_dir);
        }
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (req.path.rfind("/v1/", 0) == 0 && !authorized(req, res)) {
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });

        server.Get("/v1/state", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu);
            json j = runner->device().snapshot();
            j["scenario"] = runner->scenario().name;
            j["session"] = session;
            j["status"] = status();
            if (runner->done()) {
                Report r = runner->report();
                r.event_log.clear();
                j["report"] = r.to_json();
            }
            reply(res, 200, j);
        });

        server.Get("/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t since = 0;
            int wait_ms = 0;
            try {
                if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
                if (req.has_param("wait")) wait_ms = std::clamp(std::stoi(req.get_param_value("wait")), 0, 30000);
            } catch (const std::exception&) {
                reply_error(res, 400, "parse-error", "since and wait must be integers");
                return;
            }
            std::unique_lock lock(mu);
            if (wait_ms > 0) {
                changed.wait_for(lock, std::chrono::milliseconds(wait_ms),
                                 [&] { return stopping || runner->device().log().last_seq() > since; });
            }
            res.status = 200;
            res.set_header("X-Permesh-Session", std::to_string(session));
            res.set_content(runner->device().log().to_jsonl(since), kJson);
        });

        server.Get("/v1/pending", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu);
            json arr = json::array();
            for (const PendingDecision* p : runner->device().firewall().unresolved()) {
                arr.push_back(p->to_json());
            }
            reply(res, 200, arr);
        });

        server.Post("/v1/decide", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            if (!body->contains("id") || !(*body)["id"].is_number_unsigned() || !body->contains("action") ||
                !(*body)["action"].is_string()) {
                reply_error(res, 400, "parse-error", "expected {id, action}");
                return;
            }
            const auto action = resolution_from_string((*body)["action"].get<std::string>());
            if (!action) {
                reply_error(res, 400, "parse-error", "action must be allow, block or fake");
                return;
            }
            std::lock_guard lock(mu);
            try {
                const HttpOutcome& out = runner->device().decide_pending((*body)["id"].get<std::uint64_t>(), *action);
                reply(res, 200,
                      json{{"id", (*body)["id"]}, {"resolution", to_string(*action)}, {"outcome", to_string(out.status)}});
                poke();
            } catch (const Error& e) {
                reply_error(res, e.code() == Errc::unknown_id ? 404 : 409, to_string(e.code()), e.what());
            }
        });

        server.Post("/v1/policy", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            SlicePolicy p;
            try {
                p.app = body->at("app").get<std::string>();
                for (const json& d : body->at("allowedDomains")) {
                    p.allowed_domains.push_back(DomainPattern::parse(d.get<std::string>()));
                }
                const auto action = default_action_from_string(body->value("defaultAction", std::string("prompt")));
                if (!action) throw Error(Errc::parse_error, "defaultAction must be prompt, block or fake");
                p.default_action = *action;
            } catch (const json::exception& e) {
                reply_error(res, 400, "parse-error", e.what());
                return;
            } catch (const Error& e) {
                reply_error(res, 400, to_string(e.code()), e.what());
                return;
            }
            std::lock_guard lock(mu);
            try {
                json j = p.to_json();
                runner->device().set_slice_policy(std::move(p));
                reply(res, 200, j);
                poke();
            } catch (const Error& e) {
                reply_error(res, e.code() == Errc::unknown_app ? 404 : 422, to_string(e.code()), e.what());
            }
        });

        server.Post("/v1/user-action", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            if (!body->contains("sessionId") || !(*body)["sessionId"].is_string()) {
                reply_error(res, 400, "parse-error", "expected {sessionId}");
                return;
            }
            std::lock_guard lock(mu);
            try {
                const std::string session_id = (*body)["sessionId"].get<std::string>();
                const std::string token = runner->device().issue_user_action(session_id);
                reply(res, 200, json{{"sessionId", session_id}, {"token", token}});
                poke();
            } catch (const Error& e) {
                reply_error(res, 404, to_string(e.code()), e.what());
            }
        });

        server.Post("/v1/scenario/start", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            if (!body->contains("path") || !(*body)["path"].is_string()) {
                reply_error(res, 400, "parse-error", "expected {path}");
                return;
            }
            try {
                load_file((*body)["path"].get<std::string>(), *body);
                std::lock_guard lock(mu);
                reply(res, 200, json{{"scenario", runner->scenario().name}, {"session", session}});
            } catch (const Error& e) {
                reply_error(res, 400, to_string(e.code()), e.what());
            }
        });

        server.Post("/v1/network", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req, res);
            if (!body) return;
            if (!body->contains("connected") || !(*body)["connected"].is_boolean()) {
                reply_error(res, 400, "parse-error", "expected {connected: boolean}");
                return;
            }
            std::lock_guard lock(mu);
            runner->device().set_network_state((*body)["connected"].get<bool>());
            reply(res, 200, json{{"connected", runner->device().connected()}});
            poke();
        });
    }

    void load_file(const std::string& path, const json& overrides) {
        std::filesystem::path p(path);
        if (p.is_relative()) p = std::filesystem::path(options.scenario_root) / p;
        Scenario s = permesh::load_scenario(p.string());
        RunOptions run = options.run;
        if (overrides.contains("interactive") && overrides["interactive"].is_boolean()) {
            run.interactive = overrides["interactive"].get<bool>();
        }
        if (overrides.contains("pinning") && overrides["pinning"].is_boolean()) {
            run.pinning = overrides["pinning"].get<bool>();
        }
        std::lock_guard lock(mu);
        install(std::move(s), run);
        changed.notify_all();
    }
};

ControlApi::ControlApi(ControlApiOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ControlApi::~ControlApi() = default;

bool ControlApi::bind() {
    if (impl_->options.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->options.host);
        return impl_->bound_port > 0;
    }
    if (!impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
        return false;
    }
    impl_->bound_port = impl_->options.port;
    return true;
}

int ControlApi::port() const noexcept { return impl_->bound_port; }

void ControlApi::start() {
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ControlApi::serve() { impl_->server.listen_after_bind(); }

void ControlApi::stop() { impl_->server.stop(); }

void ControlApi::load_scenario_file(const std::string& path, const json& overrides) {
    impl_->load_file(path, overrides);
}

void ControlApi::load(Scenario scenario, RunOptions run) {
    std::lock_guard lock(impl_->mu);
    impl_->install(std::move(scenario), run);
    impl_->changed.notify_all();
}

bool ControlApi::wait_idle(int timeout_ms) {
    std::unique_lock lock(impl_->mu);
    return impl_->changed.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                                   [&] { return impl_->last != StepResult::progressed; });
}

std::string ControlApi::event_log() const {
    std::lock_guard lock(impl_->mu);
    return impl_->runner->device().log().to_jsonl();
}

}  // namespace permesh
