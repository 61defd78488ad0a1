#include "permesh/event_log.hpp"

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

std::string_view to_string(ActorKind kind) noexcept {
    switch (kind) {
        case ActorKind::app: return "app";
        case ActorKind::proxy: return "proxy";
        case ActorKind::os: return "os";
        case ActorKind::operator_: return "operator";
    }
    return "unknown";
}

std::optional<ActorKind> actor_kind_from_string(std::string_view s) noexcept {
    if (s == "app") return ActorKind::app;
    if (s == "proxy") return ActorKind::proxy;
    if (s == "os") return ActorKind::os;
    if (s == "operator") return ActorKind::operator_;
    return std::nullopt;
}

std::string_view to_string(WireType t) noexcept {
    switch (t) {
        case WireType::event: return "event";
        case WireType::pending: return "pending";
        case WireType::resolution: return "resolution";
        case WireType::state_change: return "state-change";
    }
    return "event";
}

WireType wire_type_for(std::string_view action) noexcept {
    if (action == "firewall.pending") return WireType::pending;
    if (action == "firewall.resolve") return WireType::resolution;
    if (action == "network.state" || action == "firewall.policy" || action == "dns.overlay" ||
        action == "app.status" || action == "scenario.start" || action == "scenario.end") {
        return WireType::state_change;
    }
    return WireType::event;
}

json to_wire(const LogEntry& e) {
    return json{{"seq", e.seq},
                {"time", e.time},
                {"type", to_string(wire_type_for(e.action))},
                {"actor", json{{"kind", to_string(e.actor.kind)}, {"name", e.actor.name}}},
                {"action", e.action},
                {"params", e.params},
                {"verdict", e.verdict}};
}

LogEntry from_wire(const json& j) {
    try {
        LogEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.time = j.at("time").get<std::int64_t>();
        const auto kind = actor_kind_from_string(j.at("actor").at("kind").get<std::string>());
        if (!kind) {
            throw Error(Errc::parse_error, "unknown actor kind");
        }
        e.actor = Actor{*kind, j.at("actor").at("name").get<std::string>()};
        e.action = j.at("action").get<std::string>();
        e.params = j.at("params");
        e.verdict = j.at("verdict").get<std::string>();
        if (j.contains("type") && j["type"] != to_string(wire_type_for(e.action))) {
            throw Error(Errc::parse_error, "type does not match action " + e.action);
        }
        return e;
    } catch (const json::exception& ex) {
        throw Error(Errc::parse_error, std::string("wire event: ") + ex.what());
    }
}

const LogEntry& EventLog::append(std::int64_t time, Actor actor, std::string action, json params,
                                 std::string verdict) {
    if (params.is_null()) {
        params = json::object();
    }
    entries_.push_back(LogEntry{last_seq() + 1, time, std::move(actor), std::move(action), std::move(params),
                                std::move(verdict)});
    return entries_.back();
}

std::vector<LogEntry> EventLog::since(std::uint64_t since) const {
    if (since >= entries_.size()) {
        return {};
    }
    return {entries_.begin() + static_cast<std::ptrdiff_t>(since), entries_.end()};
}

std::string EventLog::to_jsonl(std::uint64_t since) const {
    std::string out;
    for (std::size_t i = since; i < entries_.size(); ++i) {
        out += to_wire(entries_[i]).dump();
        out += '\n';
    }
    return out;
}

}  // namespace permesh
