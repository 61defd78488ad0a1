#include "permesh/scenario.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

std::string_view to_string(AppStatus s) noexcept {
    switch (s) {
        case AppStatus::idle: return "idle";
        case AppStatus::running: return "running";
        case AppStatus::suspended: return "suspended";
        case AppStatus::finished: return "finished";
        case AppStatus::failed: return "failed";
    }
    return "unknown";
}

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

struct AppRun {
    const ScenarioApp* spec = nullptr;
    AppStatus status = AppStatus::idle;
    std::size_t pc = 0;
    std::optional<std::uint64_t> pending;
    std::int64_t wake_at = 0;
};

std::string default_outcome(std::string_view verb) {
    if (verb.starts_with("http.")) return "delivered";
    if (verb.starts_with("fs.")) return "ok";
    if (verb == "stat.report") return "buffered";
    if (verb == "call.incoming") return "ringing";
    if (verb == "call.answer") return "connected";
    if (verb == "mic.start") return "capturing";
    if (verb == "bluetooth.use") return "routed";
    if (verb == "call.end") return "ended";
    if (verb == "socket.open") return "allow";
    return "ok";
}

bool log_matches(const LogEntry& e, const json& match) {
    if (match.contains("action") && e.action != match["action"].get<std::string>()) return false;
    if (match.contains("verdict") && e.verdict != match["verdict"].get<std::string>()) return false;
    if (match.contains("actor") && e.actor.name != match["actor"].get<std::string>()) return false;
    if (match.contains("params")) {
        for (const auto& [key, value] : match["params"].items()) {
            if (!e.params.contains(key) || e.params[key] != value) return false;
        }
    }
    return true;
}

std::size_t count_matches(const EventLog& log, const json& match) {
    return static_cast<std::size_t>(std::count_if(log.entries().begin(), log.entries().end(),
                                                  [&](const LogEntry& e) { return log_matches(e, match); }));
}

}  // namespace

const AssertionResult* Report::first_failure() const {
    for (const AssertionResult& r : results) {
        if (!r.ok) return &r;
    }
    return nullptr;
}

json Report::to_json() const {
    json results_json = json::array();
    for (const AssertionResult& r : results) {
        results_json.push_back(
            json{{"where", r.where}, {"description", r.description}, {"ok", r.ok}, {"detail", r.detail}});
    }
    json j{{"scenario", scenario},
           {"pass", pass},
           {"pinning", pinning},
           {"results", results_json},
           {"audit", audit_violations},
           {"apps", app_status},
           {"error", error.empty() ? json(nullptr) : json(error)}};
    if (const AssertionResult* f = first_failure()) {
        j["firstFailure"] = json{{"where", f->where}, {"description", f->description}, {"detail", f->detail}};
    }
    return j;
}

std::string Report::to_text() const {
    std::ostringstream out;
    out << scenario << ": " << (pass ? "PASS" : "FAIL") << " (pinning " << (pinning ? "on" : "off") << ")\n";
    for (const AssertionResult& r : results) {
        out << "  " << (r.ok ? "ok  " : "FAIL") << " " << r.where << "  " << r.description;
        if (!r.detail.empty()) out << "  [" << r.detail << "]";
        out << '\n';
    }
    for (const auto& [app, status] : app_status) {
        out << "  app " << app << ": " << status << '\n';
    }
    for (const std::string& v : audit_violations) {
        out << "  audit: " << v << '\n';
    }
    if (!error.empty()) {
        out << "  error: " << error << '\n';
    }
    if (const AssertionResult* f = first_failure()) {
        out << "first failure: " << f->where << "  " << f->description << '\n';
    }
    return out.str();
}

struct ScenarioRunner::State {
    Scenario scenario;
    RunOptions options;
    bool pinning = true;
    std::unique_ptr<Device> device;
    std::vector<AppRun> apps;
    std::size_t op_index = 0;
    std::map<std::string, std::string, std::less<>> vars;
    std::vector<AssertionResult> results;
    std::string error;
    bool finished = false;
    std::int64_t start = 0;

    void setup();
    StepResult step();
    void finish();

    void set_status(AppRun& app, AppStatus status, std::string detail = {});
    std::optional<json> bind(const json& args) const;
    std::optional<std::uint64_t> find_pending(const json& args) const;
    bool operator_ready(const OperatorAction& op) const;
    void run_operator(const OperatorAction& op);
    void run_action(AppRun& app, const ScriptAction& action, const json& args);
    void judge(AppRun& app, const ScriptAction& action, const std::string& outcome, const std::string& app_error,
               const std::string& detail);
    void judge_http(AppRun& app, const ScriptAction& action, const HttpOutcome& out);
    AssertionResult check_final(const FinalAssertion& a) const;
};

void ScenarioRunner::State::set_status(AppRun& app, AppStatus status, std::string detail) {
    if (app.status == status) return;
    app.status = status;
    json params{{"status", to_string(status)}};
    if (!detail.empty()) params["detail"] = std::move(detail);
    device->note(Actor{ActorKind::app, app.spec->manifest.package}, "app.status", std::move(params),
                 std::string(to_string(status)));
}

void ScenarioRunner::State::setup() {
    const Fixtures& f = scenario.fixtures;
    pinning = options.pinning.value_or(f.pinning.value_or(true));
    DeviceConfig cfg;
    cfg.pinning = pinning;
    cfg.latency_ms = f.latency_ms;
    cfg.tick_ms = f.tick_ms;
    cfg.start_time_ms = options.start_time_ms;
    device = std::make_unique<Device>(cfg);
    start = options.start_time_ms;

    const DnsTable seeded = DnsTable::from_json(f.dns);
    for (const auto& [host, addr] : seeded.records()) {
        device->dns().add_record(host, addr);
    }
    for (const auto& [addr, server] : f.servers.items()) {
        StubServer s;
        s.name = server.value("name", addr);
        s.status = server.value("status", 200);
        s.body = server.value("body", std::string("ok"));
        device->network().add_server(*Ipv4::parse(addr), std::move(s));
    }
    if (f.fs) {
        device->fs() = VirtualFS::load(*f.fs);
    }
    device->note(Actor::op(), "scenario.start", json{{"name", scenario.name}, {"pinning", pinning}}, "started");
    try {
        for (const ProxyDescriptor& d : f.proxies) {
            if (device->store().exposing(d.exposes.id)) {
                device->replace_proxy(d);
            } else {
                device->register_proxy(d);
            }
        }
    } catch (const Error& e) {
        error = std::string("fixture proxies: ") + e.what();
        finish();
        return;
    }
    if (!f.network) {
        device->set_network_state(false);
    }

    apps.reserve(scenario.apps.size());
    for (const ScenarioApp& spec : scenario.apps) {
        AppRun run;
        run.spec = &spec;
        apps.push_back(run);
    }
    for (AppRun& app : apps) {
        const ScenarioApp& spec = *app.spec;
        if (spec.install) {
            std::string outcome;
            try {
                InstallResult r = device->install(spec.manifest, spec.decision, spec.proxy_decisions);
                outcome = r.installed ? "installed" : "rejected";
            } catch (const Error& e) {
                outcome = std::string(to_string(e.code()));
            }
            const bool ok = outcome == spec.expect_install;
            results.push_back(AssertionResult{spec.where, "install " + spec.manifest.package + " -> " +
                                                              spec.expect_install,
                                              ok, ok ? "" : "got " + outcome});
            if (!ok) {
                set_status(app, AppStatus::failed, "install: " + outcome);
                continue;
            }
        }
        set_status(app, spec.script.empty() ? AppStatus::finished : AppStatus::running);
    }
}

std::optional<json> ScenarioRunner::State::bind(const json& args) const {
    json out = args;
    for (auto& [key, value] : out.items()) {
        if (key == "as" || key == "for" || !value.is_string()) continue;
        const std::string s = value.get<std::string>();
        if (s.size() > 1 && s[0] == '$') {
            auto it = vars.find(std::string_view(s).substr(1));
            if (it == vars.end()) return std::nullopt;
            value = it->second;
        }
    }
    return out;
}

std::optional<std::uint64_t> ScenarioRunner::State::find_pending(const json& args) const {
    if (args.contains("id")) {
        const std::uint64_t id = args["id"].get<std::uint64_t>();
        return device->firewall().find(id) != nullptr ? std::optional(id) : std::nullopt;
    }
    for (const PendingDecision* p : device->firewall().unresolved()) {
        if (p->app == args["app"].get<std::string>() &&
            (!args.contains("host") || p->access.host == args["host"].get<std::string>())) {
            return p->id;
        }
    }
    return std::nullopt;
}

bool ScenarioRunner::State::operator_ready(const OperatorAction& op) const {
    if (op.at + start > device->now()) return false;
    const std::optional<json> args = bind(op.args);
    if (!args) return false;
    if (op.verb == "decide") return find_pending(*args).has_value();
    return true;
}

void ScenarioRunner::State::run_operator(const OperatorAction& op) {
    const json args = *bind(op.args);
    try {
        if (op.verb == "decide") {
            const std::uint64_t id = *find_pending(args);
            device->decide_pending(id, *resolution_from_string(args["action"].get<std::string>()));
        } else if (op.verb == "network") {
            device->set_network_state(args["connected"].get<bool>());
        } else if (op.verb == "dns.rogue") {
            std::map<std::string, Ipv4> mapping;
            for (const auto& [host, addr] : args["hosts"].items()) {
                mapping[to_lower(host)] = *Ipv4::parse(addr.get<std::string>());
            }
            device->set_rogue_overlay(std::move(mapping), args.value("active", true));
        } else if (op.verb == "user-action") {
            const std::string token = device->issue_user_action(args["session"].get<std::string>());
            if (args.contains("as")) vars[args["as"].get<std::string>()] = token;
        } else if (op.verb == "policy") {
            SlicePolicy p;
            p.app = args["app"].get<std::string>();
            for (const json& d : args["allowedDomains"]) {
                p.allowed_domains.push_back(DomainPattern::parse(d.get<std::string>()));
            }
            p.default_action = *default_action_from_string(args.value("defaultAction", std::string("prompt")));
            device->set_slice_policy(std::move(p));
        } else if (op.verb == "uninstall") {
            device->uninstall(args["app"].get<std::string>());
        }
    } catch (const Error& e) {
        results.push_back(AssertionResult{op.where, "operator " + op.verb, false, e.what()});
    }
}

void ScenarioRunner::State::judge(AppRun& app, const ScriptAction& action, const std::string& outcome,
                                  const std::string& app_error, const std::string& detail) {
    const std::optional<std::string>& expected = action.expect.for_mode(pinning);
    if (expected) {
        const bool ok = outcome == *expected;
        results.push_back(AssertionResult{action.where, action.verb + " -> " + *expected, ok,
                                          ok ? detail : "got " + outcome + (detail.empty() ? "" : ": " + detail)});
        if (!ok) {
            set_status(app, AppStatus::failed, "assertion failed at " + action.where);
        }
        return;
    }
    if (outcome == default_outcome(action.verb)) return;
    const auto tolerated = [&](const std::string& s) {
        return !s.empty() && std::find(action.tolerate.begin(), action.tolerate.end(), s) != action.tolerate.end();
    };
    if (tolerated(outcome) || tolerated(app_error)) return;
    set_status(app, AppStatus::failed, "unhandled " + (app_error.empty() ? outcome : app_error) + " at " +
                                           action.where);
}

void ScenarioRunner::State::judge_http(AppRun& app, const ScriptAction& action, const HttpOutcome& out) {
    const std::optional<AppHttpResult> view = app_view(out);
    judge(app, action, std::string(to_string(out.status)), view ? view->error : "", out.detail);
}

void ScenarioRunner::State::run_action(AppRun& app, const ScriptAction& action, const json& args) {
    const std::string& pkg = app.spec->manifest.package;
    const auto str = [&](const char* key) { return args.value(key, std::string()); };
    const std::string& verb = action.verb;
    try {
        if (verb == "http.get" || verb == "http.post") {
            const HttpOutcome out = device->http_request(pkg, verb == "http.get" ? HttpMethod::get : HttpMethod::post,
                                                         str("url"), str("body"));
            if (out.status == HttpStatus::pending) {
                app.pending = out.pending_id;
                set_status(app, AppStatus::suspended, "pending " + std::to_string(*out.pending_id));
                return;
            }
            judge_http(app, action, out);
        } else if (verb.starts_with("fs.")) {
            const FsOp op = *fs_op_from_string(verb.substr(3));
            const FsOutcome out = device->fs_access(pkg, str("path"), op, str("data"));
            std::string outcome(to_string(out.status));
            if (out.status == FsStatus::ok && args.contains("content") && out.data != str("content")) {
                outcome = "content-mismatch";
            }
            if (out.status == FsStatus::ok && args.contains("entries") &&
                json(out.entries) != args["entries"]) {
                outcome = "entries-mismatch";
            }
            judge(app, action, outcome, outcome == "ok" ? "" : outcome, out.detail);
        } else if (verb == "stat.report") {
            const StatOutcome r = device->report_stat(pkg, str("event"));
            judge(app, action, r == StatOutcome::buffered ? "buffered" : "denied", "", "");
        } else if (verb == "call.incoming") {
            const std::optional<std::string> session = device->incoming_call(pkg);
            if (session && args.contains("as")) vars[str("as")] = *session;
            judge(app, action, session ? "ringing" : "denied", "", session.value_or(""));
        } else if (verb == "call.answer") {
            judge(app, action, device->answer_call(pkg, str("session")) ? "connected" : "denied", "", "");
        } else if (verb == "mic.start") {
            const std::optional<std::string> token =
                args.contains("token") ? std::optional(str("token")) : std::nullopt;
            const MicResult r = device->start_mic_capture(pkg, str("session"), token);
            judge(app, action, r.capturing ? "capturing" : "denied", "", r.reason);
        } else if (verb == "bluetooth.use") {
            judge(app, action, device->use_bluetooth(pkg, str("session")) ? "routed" : "denied", "", "");
        } else if (verb == "call.end") {
            judge(app, action, device->hang_up(pkg, str("session")) ? "ended" : "denied", "", "");
        } else if (verb == "socket.open") {
            const std::optional<Ipv4> addr = Ipv4::parse(str("address"));
            if (!addr) throw Error(Errc::malformed_url, "bad socket address " + str("address"));
            judge(app, action, device->open_raw_socket(pkg, *addr) ? "allow" : "deny", "", "");
        } else if (verb == "wait") {
            if (args.contains("ms")) app.wake_at = device->now() + args["ms"].get<std::int64_t>();
        }
    } catch (const Error& e) {
        const std::string code(to_string(e.code()));
        judge(app, action, code, code, e.what());
    }
}

StepResult ScenarioRunner::State::step() {
    if (finished) return StepResult::done;
    bool progressed = false;

    while (op_index < scenario.operator_actions.size() && operator_ready(scenario.operator_actions[op_index])) {
        run_operator(scenario.operator_actions[op_index++]);
        device->tick();
        progressed = true;
    }

    for (AppRun& app : apps) {
        if (app.status == AppStatus::suspended) {
            if (const HttpOutcome* out = device->completed_request(*app.pending)) {
                const ScriptAction& action = app.spec->script[app.pc - 1];
                set_status(app, AppStatus::running);
                judge_http(app, action, *out);
                app.pending.reset();
                device->tick();
                progressed = true;
            }
            continue;
        }
        if (app.status != AppStatus::running || app.wake_at > device->now()) continue;
        if (app.pc >= app.spec->script.size()) {
            set_status(app, AppStatus::finished);
            progressed = true;
            continue;
        }
        const ScriptAction& action = app.spec->script[app.pc];
        if (action.verb == "wait" && action.args.contains("for") &&
            !vars.contains(action.args["for"].get<std::string>())) {
            continue;
        }
        const std::optional<json> args = bind(action.args);
        if (!args) continue;
        ++app.pc;
        run_action(app, action, *args);
        device->tick();
        progressed = true;
    }

    const bool apps_done = std::all_of(apps.begin(), apps.end(), [](const AppRun& a) {
        return a.status == AppStatus::finished || a.status == AppStatus::failed;
    });
    if (apps_done && op_index == scenario.operator_actions.size()) {
        finish();
        return StepResult::done;
    }
    if (progressed) return StepResult::progressed;

    // Nothing could move: jump the clock to the next timed event, if any.
    std::int64_t next = kNever;
    if (op_index < scenario.operator_actions.size()) {
        const std::int64_t at = scenario.operator_actions[op_index].at + start;
        if (at > device->now()) next = at;
    }
    for (const AppRun& app : apps) {
        if (app.status == AppStatus::running && app.wake_at > device->now()) next = std::min(next, app.wake_at);
    }
    if (next != kNever) {
        device->advance_to(next);
        return StepResult::progressed;
    }
    if (options.interactive) return StepResult::waiting;

    const auto unresolved = device->firewall().unresolved();
    if (!unresolved.empty()) {
        error = "unscripted-prompt: pending decision " + std::to_string(unresolved.front()->id) + " for " +
                unresolved.front()->app + " (" + unresolved.front()->access.host + ") has no operator entry";
    } else {
        std::string who;
        for (const AppRun& app : apps) {
            if (app.status == AppStatus::running) who += " " + app.spec->manifest.package;
        }
        if (op_index < scenario.operator_actions.size()) {
            who += " operator " + scenario.operator_actions[op_index].where;
        }
        error = "stalled: waiting on an unbound reference:" + who;
    }
    finish();
    return StepResult::done;
}

AssertionResult ScenarioRunner::State::check_final(const FinalAssertion& a) const {
    AssertionResult r{a.where, a.check, false, {}};
    const json& args = a.args;
    const auto compare = [&](const json& actual) {
        r.description += " == " + args["equals"].dump();
        r.ok = actual == args["equals"];
        if (!r.ok) r.detail = "got " + actual.dump();
    };
    if (a.check == "stats.buffered") {
        compare(device->stats().buffered());
    } else if (a.check == "stats.flushed") {
        compare(device->stats().flushed());
    } else if (a.check == "stats.reported") {
        compare(device->stats().reported());
    } else if (a.check == "mic.activations") {
        compare(count_matches(device->log(), json{{"action", "phone.mic"}, {"verdict", "capturing"}}));
    } else if (a.check == "fs.exists" || a.check == "fs.absent") {
        const std::string path = args["path"].get<std::string>();
        r.description += " " + path;
        r.ok = device->fs().exists(path) == (a.check == "fs.exists");
    } else if (a.check == "fs.content") {
        const std::string path = args["path"].get<std::string>();
        r.description += " " + path;
        if (device->fs().exists(path) && !device->fs().is_dir(path)) {
            compare(device->fs().read(path));
        } else {
            r.detail = "no such file";
        }
    } else if (a.check == "log.contains" || a.check == "log.absent") {
        const std::size_t n = count_matches(device->log(), args["match"]);
        r.description += " " + args["match"].dump();
        r.ok = (n > 0) == (a.check == "log.contains");
        if (!r.ok) r.detail = std::to_string(n) + " matching entries";
    } else if (a.check == "log.count") {
        r.description += " " + args["match"].dump();
        compare(count_matches(device->log(), args["match"]));
    } else if (a.check == "app.status") {
        const std::string pkg = args["app"].get<std::string>();
        r.description += " " + pkg;
        auto it = std::find_if(apps.begin(), apps.end(),
                               [&](const AppRun& x) { return x.spec->manifest.package == pkg; });
        if (it == apps.end()) {
            r.detail = "no such app in scenario";
        } else {
            compare(std::string(to_string(it->status)));
        }
    }
    return r;
}

void ScenarioRunner::State::finish() {
    if (finished) return;
    finished = true;
    json statuses = json::object();
    for (const AppRun& app : apps) {
        statuses[app.spec->manifest.package] = to_string(app.status);
    }
    device->note(Actor::op(), "scenario.end", json{{"apps", statuses}, {"error", error}},
                 error.empty() ? "complete" : "error");
    for (const FinalAssertion& a : scenario.assertions) {
        if (a.pinning && *a.pinning != pinning) continue;
        results.push_back(check_final(a));
    }
    // A failed app fails the run unless the scenario says it should.
    for (const AppRun& app : apps) {
        if (app.status != AppStatus::failed) continue;
        const std::string& pkg = app.spec->manifest.package;
        const bool declared = std::any_of(scenario.assertions.begin(), scenario.assertions.end(), [&](const auto& a) {
            return a.check == "app.status" && a.args.value("app", std::string()) == pkg;
        });
        if (!declared) {
            results.push_back(AssertionResult{app.spec->where, pkg + " completes", false, "app failed"});
        }
    }
}

ScenarioRunner::ScenarioRunner(Scenario scenario, RunOptions options) : state_(std::make_unique<State>()) {
    state_->scenario = std::move(scenario);
    state_->options = options;
    state_->setup();
}

ScenarioRunner::~ScenarioRunner() = default;

StepResult ScenarioRunner::step() { return state_->step(); }

StepResult ScenarioRunner::run() {
    for (;;) {
        const StepResult r = state_->step();
        if (r != StepResult::progressed) return r;
    }
}

bool ScenarioRunner::done() const noexcept { return state_->finished; }
Device& ScenarioRunner::device() noexcept { return *state_->device; }
const Device& ScenarioRunner::device() const noexcept { return *state_->device; }
const Scenario& ScenarioRunner::scenario() const noexcept { return state_->scenario; }

Report ScenarioRunner::report() const {
    const State& s = *state_;
    Report r;
    r.scenario = s.scenario.name;
    r.pinning = s.pinning;
    r.results = s.results;
    r.error = s.error;
    for (const AppRun& app : s.apps) {
        r.app_status[app.spec->manifest.package] = std::string(to_string(app.status));
    }
    r.audit_violations = audit_log(s.device->log().entries());
    const StatsBuffer& st = s.device->stats();
    if (st.reported() != st.flushed() + st.buffered()) {
        r.audit_violations.push_back("stats: reported " + std::to_string(st.reported()) + " != flushed " +
                                     std::to_string(st.flushed()) + " + buffered " + std::to_string(st.buffered()));
    }
    r.event_log = s.device->log().to_jsonl();
    r.pass = s.finished && r.error.empty() && r.audit_violations.empty() && r.first_failure() == nullptr;
    return r;
}

Report run_scenario(const Scenario& scenario, const RunOptions& options) {
    ScenarioRunner runner(scenario, options);
    runner.run();
    return runner.report();
}

}  // namespace permesh
