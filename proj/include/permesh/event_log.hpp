#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace permesh {

enum class ActorKind { app, proxy, os, operator_ };
std::string_view to_string(ActorKind kind) noexcept;
std::optional<ActorKind> actor_kind_from_string(std::string_view s) noexcept;

struct Actor {
    ActorKind kind = ActorKind::os;
    std::string name;

    static Actor os() { return {ActorKind::os, "os"}; }
    static Actor op() { return {ActorKind::operator_, "operator"}; }
    friend bool operator==(const Actor&, const Actor&) = default;
};

struct LogEntry {
    std::uint64_t seq = 0;
    std::int64_t time = 0;
    Actor actor;
    std::string action;
    nlohmann::json params = nlohmann::json::object();
    std::string verdict;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

// Stream discriminator for the control API.
enum class WireType { event, pending, resolution, state_change };
std::string_view to_string(WireType t) noexcept;
WireType wire_type_for(std::string_view action) noexcept;

nlohmann::json to_wire(const LogEntry& entry);
// Throws Error(parse_error).
LogEntry from_wire(const nlohmann::json& j);

// Append-only; seq starts at 1 and increases by one per entry.
class EventLog {
public:
    const LogEntry& append(std::int64_t time, Actor actor, std::string action, nlohmann::json params,
                           std::string verdict);

    const std::vector<LogEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::uint64_t last_seq() const noexcept { return entries_.empty() ? 0 : entries_.back().seq; }

    // Entries with seq > `since`.
    std::vector<LogEntry> since(std::uint64_t since) const;

    // One wire event per line.
    std::string to_jsonl(std::uint64_t since = 0) const;

private:
    std::vector<LogEntry> entries_;
};

}  // namespace permesh
