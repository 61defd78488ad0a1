#include "permesh/merge.hpp"

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

const StatEntry& StatsBuffer::push(std::string app, std::string event, std::int64_t timestamp) {
    ++reported_;
    entries_.push_back(StatEntry{reported_, std::move(app), std::move(event), timestamp});
    return entries_.back();
}

void StatsBuffer::pop_delivered() {
    if (!entries_.empty()) {
        entries_.pop_front();
        ++flushed_;
    }
}

std::string_view to_string(SessionState s) noexcept {
    switch (s) {
        case SessionState::ringing: return "ringing";
        case SessionState::connected: return "connected";
        case SessionState::ended: return "ended";
    }
    return "unknown";
}

json PhoneSession::to_json() const {
    return json{{"id", id},
                {"app", app},
                {"state", to_string(state)},
                {"micActive", mic_active},
                {"bluetoothActive", bluetooth_active}};
}

PhoneSession& PhoneSessions::create(std::string app) {
    std::string id = "call-" + std::to_string(next_session_++);
    PhoneSession s{id, std::move(app), SessionState::ringing, false, false, std::nullopt};
    return sessions_.emplace(std::move(id), std::move(s)).first->second;
}

const PhoneSession* PhoneSessions::find(std::string_view id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
}

PhoneSession& PhoneSessions::owned(std::string_view app, std::string_view session) {
    auto it = sessions_.find(session);
    if (it == sessions_.end() || it->second.app != app) {
        throw Error(Errc::invalid_session, std::string(session));
    }
    return it->second;
}

const UserActionToken& PhoneSessions::issue_token(std::string_view session, std::int64_t now) {
    const PhoneSession* s = find(session);
    if (s == nullptr || s->state == SessionState::ended) {
        throw Error(Errc::invalid_session, std::string(session));
    }
    std::string id = "tap-" + std::to_string(next_token_++);
    UserActionToken t{id, std::string(session), false, now};
    return tokens_.emplace(std::move(id), std::move(t)).first->second;
}

void PhoneSessions::answer(std::string_view app, std::string_view session) {
    PhoneSession& s = owned(app, session);
    if (s.state != SessionState::ringing) {
        throw Error(Errc::invalid_session, std::string(session) + " is " + std::string(to_string(s.state)));
    }
    s.state = SessionState::connected;
}

MicResult PhoneSessions::start_mic(std::string_view app, std::string_view session,
                                   const std::optional<std::string>& token) {
    PhoneSession& s = owned(app, session);
    if (!token) {
        return {false, "no-user-action"};
    }
    auto it = tokens_.find(*token);
    if (it == tokens_.end() || it->second.session != session) {
        throw Error(Errc::wrong_session_token, *token + " was not issued for " + std::string(session));
    }
    if (it->second.consumed) {
        throw Error(Errc::token_replay, *token);
    }
    if (s.state != SessionState::connected) {
        return {false, "not-connected"};
    }
    it->second.consumed = true;
    s.mic_active = true;
    s.mic_token = *token;
    return {true, {}};
}

bool PhoneSessions::use_bluetooth(std::string_view app, std::string_view session) {
    PhoneSession& s = owned(app, session);
    if (s.state != SessionState::connected) {
        return false;
    }
    s.bluetooth_active = true;
    return true;
}

void PhoneSessions::hang_up(std::string_view app, std::string_view session) {
    PhoneSession& s = owned(app, session);
    s.state = SessionState::ended;
    s.mic_active = false;
    s.bluetooth_active = false;
}

const UserActionToken* PhoneSessions::token(std::string_view id) const {
    auto it = tokens_.find(id);
    return it == tokens_.end() ? nullptr : &it->second;
}

std::vector<const PhoneSession*> PhoneSessions::sessions() const {
    std::vector<const PhoneSession*> out;
    for (const auto& entry : sessions_) {
        out.push_back(&entry.second);
    }
    return out;
}

}  // namespace permesh
