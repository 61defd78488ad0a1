#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace permesh {

// ---------------------------------------------------------------------------
// Collect-Usage-Statistics state.

struct StatEntry {
    std::uint64_t seq = 0;  // report order, 1-based
    std::string app;
    std::string event;
    std::int64_t timestamp = 0;
};

class StatsBuffer {
public:
    const StatEntry& push(std::string app, std::string event, std::int64_t timestamp);
    const StatEntry* front() const { return entries_.empty() ? nullptr : &entries_.front(); }
    void pop_delivered();

    std::size_t buffered() const noexcept { return entries_.size(); }
    std::uint64_t reported() const noexcept { return reported_; }
    std::uint64_t flushed() const noexcept { return flushed_; }
    const std::deque<StatEntry>& entries() const noexcept { return entries_; }

private:
    std::deque<StatEntry> entries_;
    std::uint64_t reported_ = 0;
    std::uint64_t flushed_ = 0;
};

struct NetworkState {
    bool connected = true;
};

// ---------------------------------------------------------------------------
// Act-as-a-Phone state.

enum class SessionState { ringing, connected, ended };
std::string_view to_string(SessionState s) noexcept;

struct PhoneSession {
    std::string id;
    std::string app;
    SessionState state = SessionState::ringing;
    bool mic_active = false;
    bool bluetooth_active = false;
    std::optional<std::string> mic_token;  // the consumed token that enabled the mic

    nlohmann::json to_json() const;
};

// Minted only through the operator channel, modeling a physical tap.
struct UserActionToken {
    std::string id;
    std::string session;
    bool consumed = false;
    std::int64_t issued_at = 0;
};

struct MicResult {
    bool capturing = false;
    std::string reason;  // set when denied
};

class PhoneSessions {
public:
    PhoneSession& create(std::string app);
    const PhoneSession* find(std::string_view id) const;

    // Throws invalid_session for an unknown or ended session.
    const UserActionToken& issue_token(std::string_view session, std::int64_t now);

    // Throws invalid_session unless the session exists, belongs to `app`,
    // and is ringing.
    void answer(std::string_view app, std::string_view session);

    // Throws invalid_session, wrong_session_token, token_replay. A missing
    // token or a session that is not connected is a denial, not an error.
    MicResult start_mic(std::string_view app, std::string_view session, const std::optional<std::string>& token);

    // Throws invalid_session. Routed iff the call is connected.
    bool use_bluetooth(std::string_view app, std::string_view session);

    // Throws invalid_session.
    void hang_up(std::string_view app, std::string_view session);

    const UserActionToken* token(std::string_view id) const;
    std::vector<const PhoneSession*> sessions() const;
    std::size_t tokens_issued() const noexcept { return tokens_.size(); }

private:
    PhoneSession& owned(std::string_view app, std::string_view session);

    std::map<std::string, PhoneSession, std::less<>> sessions_;
    std::map<std::string, UserActionToken, std::less<>> tokens_;
    std::uint64_t next_session_ = 1;
    std::uint64_t next_token_ = 1;
};

}  // namespace permesh
