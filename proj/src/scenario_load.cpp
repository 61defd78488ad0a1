#include <filesystem>
#include <fstream>
#include <set>

#include "permesh/error.hpp"
#include "permesh/scenario.hpp"

namespace permesh {

using nlohmann::json;

namespace {

struct VerbSpec {
    std::set<std::string, std::less<>> required;
    std::set<std::string, std::less<>> optional;
};

const std::map<std::string, VerbSpec, std::less<>>& script_verbs() {
    static const std::map<std::string, VerbSpec, std::less<>> verbs{
        {"http.get", {{"url"}, {}}},
        {"http.post", {{"url"}, {"body"}}},
        {"fs.write", {{"path", "data"}, {}}},
        {"fs.read", {{"path"}, {"content"}}},
        {"fs.mkdir", {{"path"}, {}}},
        {"fs.list", {{"path"}, {"entries"}}},
        {"fs.delete", {{"path"}, {}}},
        {"stat.report", {{"event"}, {}}},
        {"call.incoming", {{}, {"as"}}},
        {"call.answer", {{"session"}, {}}},
        {"mic.start", {{"session"}, {"token"}}},
        {"bluetooth.use", {{"session"}, {}}},
        {"call.end", {{"session"}, {}}},
        {"socket.open", {{"address"}, {}}},
        {"wait", {{}, {"ms", "for"}}},
    };
    return verbs;
}

const std::map<std::string, VerbSpec, std::less<>>& operator_verbs() {
    static const std::map<std::string, VerbSpec, std::less<>> verbs{
        {"decide", {{"action"}, {"id", "app", "host"}}},
        {"network", {{"connected"}, {}}},
        {"dns.rogue", {{"hosts"}, {"active"}}},
        {"user-action", {{"session"}, {"as"}}},
        {"policy", {{"app", "allowedDomains"}, {"defaultAction"}}},
        {"uninstall", {{"app"}, {}}},
    };
    return verbs;
}

const std::set<std::string, std::less<>>& assertion_checks() {
    static const std::set<std::string, std::less<>> checks{
        "stats.buffered", "stats.flushed", "stats.reported", "fs.exists", "fs.absent", "fs.content",
        "log.contains",   "log.absent",    "log.count",      "app.status", "mic.activations",
    };
    return checks;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(Errc::parse_error, (where.empty() ? std::string("/") : where) + ": " + what);
}

std::string child(const std::string& where, std::string_view key) {
    return where + "/" + std::string(key);
}

std::string child(const std::string& where, std::size_t index) {
    return where + "/" + std::to_string(index);
}

const json& require_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    return j;
}

const json& require_array(const json& j, const std::string& where) {
    if (!j.is_array()) {
        fail(where, "expected an array");
    }
    return j;
}

std::string require_string(const json& j, const std::string& where) {
    if (!j.is_string()) {
        fail(where, "expected a string");
    }
    return j.get<std::string>();
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string, std::less<>>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            fail(child(where, key), "unknown field \"" + key + "\"");
        }
    }
}

json read_json_file(const std::filesystem::path& path, const std::string& where) {
    std::ifstream in(path);
    if (!in) {
        fail(where, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(where, path.string() + ": " + e.what());
    }
}

std::filesystem::path resolve(const std::string& base_dir, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
}

GrantDecision parse_decision(const json& j, const std::string& where) {
    const std::string s = require_string(j, where);
    if (s == "accept") return GrantDecision::accept_all;
    if (s == "reject") return GrantDecision::reject;
    fail(where, "expected \"accept\" or \"reject\", got \"" + s + "\"");
}

Expectation parse_expectation(const json& j, const std::string& where) {
    Expectation e;
    if (j.is_string()) {
        e.any = j.get<std::string>();
        return e;
    }
    require_object(j, where);
    check_keys(j, where, {"pinned", "unpinned"});
    if (j.contains("pinned")) e.pinned = require_string(j["pinned"], child(where, "pinned"));
    if (j.contains("unpinned")) e.unpinned = require_string(j["unpinned"], child(where, "unpinned"));
    return e;
}

void check_verb_args(const json& j, const std::string& where, const std::string& verb, const VerbSpec& spec,
                     std::set<std::string, std::less<>> allowed) {
    for (const std::string& r : spec.required) {
        if (!j.contains(r)) {
            fail(where, verb + " requires \"" + r + "\"");
        }
        allowed.insert(r);
    }
    allowed.insert(spec.optional.begin(), spec.optional.end());
    check_keys(j, where, allowed);
}

ScriptAction parse_action(const json& j, const std::string& where) {
    require_object(j, where);
    if (!j.contains("verb")) {
        fail(where, "missing \"verb\"");
    }
    ScriptAction a;
    a.where = where;
    a.verb = require_string(j["verb"], child(where, "verb"));
    auto it = script_verbs().find(a.verb);
    if (it == script_verbs().end()) {
        fail(child(where, "verb"), "unknown action verb \"" + a.verb + "\"");
    }
    check_verb_args(j, where, a.verb, it->second, {"verb", "expect", "tolerate"});
    if (a.verb == "wait" && j.contains("ms") == j.contains("for")) {
        fail(where, "wait takes exactly one of \"ms\" or \"for\"");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "expect") {
            a.expect = parse_expectation(value, child(where, key));
        } else if (key == "tolerate") {
            require_array(value, child(where, key));
            for (std::size_t i = 0; i < value.size(); ++i) {
                a.tolerate.push_back(require_string(value[i], child(child(where, key), i)));
            }
        } else if (key != "verb") {
            a.args[key] = value;
        }
    }
    if (a.args.contains("ms") && !a.args["ms"].is_number_integer()) {
        fail(child(where, "ms"), "expected an integer");
    }
    for (const char* key : {"url", "path", "data", "event", "session", "token", "address", "as", "for", "body"}) {
        if (a.args.contains(key)) {
            require_string(a.args[key], child(where, key));
        }
    }
    return a;
}

ScenarioApp parse_app(const json& j, const std::string& where, const std::string& base_dir) {
    require_object(j, where);
    check_keys(j, where, {"manifest", "install", "decision", "proxyDecisions", "expectInstall", "script"});
    if (!j.contains("manifest")) {
        fail(where, "missing \"manifest\"");
    }
    ScenarioApp app;
    app.where = where;
    const std::string mw = child(where, "manifest");
    json manifest = j["manifest"].is_string()
                        ? read_json_file(resolve(base_dir, j["manifest"].get<std::string>()), mw)
                        : j["manifest"];
    try {
        app.manifest = AppManifest::from_json(manifest);
    } catch (const Error& e) {
        fail(mw, e.what());
    }
    if (j.contains("install")) {
        if (!j["install"].is_boolean()) fail(child(where, "install"), "expected a boolean");
        app.install = j["install"].get<bool>();
    }
    if (j.contains("decision")) {
        app.decision = parse_decision(j["decision"], child(where, "decision"));
    }
    if (j.contains("proxyDecisions")) {
        const std::string pw = child(where, "proxyDecisions");
        require_object(j["proxyDecisions"], pw);
        for (const auto& [id, d] : j["proxyDecisions"].items()) {
            app.proxy_decisions[id] = parse_decision(d, child(pw, id));
        }
    }
    if (j.contains("expectInstall")) {
        app.expect_install = require_string(j["expectInstall"], child(where, "expectInstall"));
    }
    if (j.contains("script")) {
        const std::string sw = child(where, "script");
        require_array(j["script"], sw);
        for (std::size_t i = 0; i < j["script"].size(); ++i) {
            app.script.push_back(parse_action(j["script"][i], child(sw, i)));
        }
    }
    return app;
}

OperatorAction parse_operator(const json& j, const std::string& where) {
    require_object(j, where);
    if (!j.contains("do")) {
        fail(where, "missing \"do\"");
    }
    OperatorAction a;
    a.where = where;
    a.verb = require_string(j["do"], child(where, "do"));
    auto it = operator_verbs().find(a.verb);
    if (it == operator_verbs().end()) {
        fail(child(where, "do"), "unknown operator verb \"" + a.verb + "\"");
    }
    check_verb_args(j, where, a.verb, it->second, {"do", "at"});
    if (j.contains("at")) {
        if (!j["at"].is_number_integer() || j["at"].get<std::int64_t>() < 0) {
            fail(child(where, "at"), "expected a non-negative integer");
        }
        a.at = j["at"].get<std::int64_t>();
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "do" && key != "at") {
            a.args[key] = value;
        }
    }
    if (a.verb == "decide") {
        if (!a.args.contains("id") && !a.args.contains("app")) {
            fail(where, "decide needs \"id\" or \"app\"");
        }
        const std::string action = require_string(a.args["action"], child(where, "action"));
        if (!resolution_from_string(action)) {
            fail(child(where, "action"), "expected allow, block or fake");
        }
    }
    if (a.verb == "network" && !a.args["connected"].is_boolean()) {
        fail(child(where, "connected"), "expected a boolean");
    }
    if (a.verb == "policy") {
        require_array(a.args["allowedDomains"], child(where, "allowedDomains"));
        for (std::size_t i = 0; i < a.args["allowedDomains"].size(); ++i) {
            const std::string pw = child(child(where, "allowedDomains"), i);
            try {
                DomainPattern::parse(require_string(a.args["allowedDomains"][i], pw));
            } catch (const Error& e) {
                fail(pw, e.what());
            }
        }
        if (a.args.contains("defaultAction") &&
            !default_action_from_string(require_string(a.args["defaultAction"], child(where, "defaultAction")))) {
            fail(child(where, "defaultAction"), "expected prompt, block or fake");
        }
    }
    if (a.verb == "dns.rogue") {
        const std::string hw = child(where, "hosts");
        require_object(a.args["hosts"], hw);
        for (const auto& [host, addr] : a.args["hosts"].items()) {
            if (!Ipv4::parse(require_string(addr, child(hw, host)))) {
                fail(child(hw, host), "expected a dotted IPv4 address");
            }
        }
    }
    return a;
}

FinalAssertion parse_assertion(const json& j, const std::string& where) {
    require_object(j, where);
    if (!j.contains("check")) {
        fail(where, "missing \"check\"");
    }
    FinalAssertion a;
    a.where = where;
    a.check = require_string(j["check"], child(where, "check"));
    if (!assertion_checks().contains(a.check)) {
        fail(child(where, "check"), "unknown check \"" + a.check + "\"");
    }
    check_keys(j, where, {"check", "equals", "path", "app", "match", "pinning"});
    if (j.contains("pinning")) {
        if (!j["pinning"].is_boolean()) fail(child(where, "pinning"), "expected a boolean");
        a.pinning = j["pinning"].get<bool>();
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "check" && key != "pinning") {
            a.args[key] = value;
        }
    }
    const bool needs_equals = a.check.starts_with("stats.") || a.check == "fs.content" || a.check == "log.count" ||
                              a.check == "app.status" || a.check == "mic.activations";
    if (needs_equals && !a.args.contains("equals")) {
        fail(where, a.check + " requires \"equals\"");
    }
    if (a.check.starts_with("fs.") && !a.args.contains("path")) {
        fail(where, a.check + " requires \"path\"");
    }
    if (a.check.starts_with("log.")) {
        if (!a.args.contains("match")) fail(where, a.check + " requires \"match\"");
        require_object(a.args["match"], child(where, "match"));
        check_keys(a.args["match"], child(where, "match"), {"action", "verdict", "actor", "params"});
    }
    if (a.check == "app.status" && !a.args.contains("app")) {
        fail(where, "app.status requires \"app\"");
    }
    return a;
}

Fixtures parse_fixtures(const json& j, const std::string& where, const std::string& base_dir) {
    require_object(j, where);
    check_keys(j, where, {"dns", "dnsFile", "servers", "fs", "proxies", "pinning", "network", "latencyMs", "tickMs"});
    Fixtures f;
    if (j.contains("dnsFile")) {
        f.dns = read_json_file(resolve(base_dir, require_string(j["dnsFile"], child(where, "dnsFile"))),
                               child(where, "dnsFile"));
    }
    if (j.contains("dns")) {
        require_object(j["dns"], child(where, "dns"));
        f.dns.update(j["dns"]);
    }
    try {
        DnsTable::from_json(f.dns);
    } catch (const Error& e) {
        fail(child(where, "dns"), e.what());
    }
    if (j.contains("servers")) {
        const std::string sw = child(where, "servers");
        require_object(j["servers"], sw);
        for (const auto& [addr, server] : j["servers"].items()) {
            if (!Ipv4::parse(addr)) fail(child(sw, addr), "expected a dotted IPv4 address as key");
            require_object(server, child(sw, addr));
            check_keys(server, child(sw, addr), {"name", "status", "body"});
        }
        f.servers = j["servers"];
    }
    if (j.contains("fs")) {
        try {
            VirtualFS::load(j["fs"]);
        } catch (const Error& e) {
            fail(child(where, "fs"), e.what());
        }
        f.fs = j["fs"];
    }
    if (j.contains("proxies")) {
        const std::string pw = child(where, "proxies");
        require_array(j["proxies"], pw);
        for (std::size_t i = 0; i < j["proxies"].size(); ++i) {
            const std::string iw = child(pw, i);
            const json& entry = j["proxies"][i];
            json d = entry.is_string() ? read_json_file(resolve(base_dir, entry.get<std::string>()), iw) : entry;
            try {
                f.proxies.push_back(ProxyDescriptor::from_json(d));
            } catch (const Error& e) {
                fail(iw, e.what());
            }
        }
    }
    if (j.contains("pinning")) {
        if (!j["pinning"].is_boolean()) fail(child(where, "pinning"), "expected a boolean");
        f.pinning = j["pinning"].get<bool>();
    }
    if (j.contains("network")) {
        if (!j["network"].is_boolean()) fail(child(where, "network"), "expected a boolean");
        f.network = j["network"].get<bool>();
    }
    if (j.contains("latencyMs")) {
        if (!j["latencyMs"].is_number() || j["latencyMs"].get<double>() < 0) {
            fail(child(where, "latencyMs"), "expected a non-negative number");
        }
        f.latency_ms = j["latencyMs"].get<double>();
    }
    if (j.contains("tickMs")) {
        if (!j["tickMs"].is_number_integer() || j["tickMs"].get<std::int64_t>() < 1) {
            fail(child(where, "tickMs"), "expected a positive integer");
        }
        f.tick_ms = j["tickMs"].get<std::int64_t>();
    }
    return f;
}

}  // namespace

const std::optional<std::string>& Expectation::for_mode(bool pinning) const {
    const std::optional<std::string>& specific = pinning ? pinned : unpinned;
    return specific ? specific : any;
}

Scenario parse_scenario(const json& j, const std::string& base_dir) {
    require_object(j, "");
    check_keys(j, "", {"name", "description", "fixtures", "apps", "operator", "assert"});
    Scenario s;
    if (j.contains("name")) s.name = require_string(j["name"], "/name");
    if (j.contains("description")) s.description = require_string(j["description"], "/description");
    if (j.contains("fixtures")) s.fixtures = parse_fixtures(j["fixtures"], "/fixtures", base_dir);
    if (j.contains("apps")) {
        require_array(j["apps"], "/apps");
        for (std::size_t i = 0; i < j["apps"].size(); ++i) {
            s.apps.push_back(parse_app(j["apps"][i], child("/apps", i), base_dir));
        }
    }
    if (j.contains("operator")) {
        require_array(j["operator"], "/operator");
        for (std::size_t i = 0; i < j["operator"].size(); ++i) {
            s.operator_actions.push_back(parse_operator(j["operator"][i], child("/operator", i)));
        }
    }
    if (j.contains("assert")) {
        require_array(j["assert"], "/assert");
        for (std::size_t i = 0; i < j["assert"].size(); ++i) {
            s.assertions.push_back(parse_assertion(j["assert"][i], child("/assert", i)));
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, path + ": cannot open file");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, path + ": " + e.what());
    }
    Scenario s;
    try {
        s = parse_scenario(j, std::filesystem::path(path).parent_path().string());
    } catch (const Error& e) {
        throw Error(Errc::parse_error, path + ": " + std::string(e.what()).substr(std::string("parse-error: ").size()));
    }
    if (s.name.empty()) {
        s.name = std::filesystem::path(path).stem().string();
    }
    return s;
}

}  // namespace permesh
