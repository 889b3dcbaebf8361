#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace telecomrag::history {

using Clock = std::chrono::system_clock;

inline constexpr std::size_t kDefaultWindow = 10;
inline constexpr std::chrono::hours kIdleExpiry{24};

struct Turn {
  std::string query;
  std::string answer;
  std::vector<std::string> references;  // doc_ids
  Clock::time_point timestamp{};
};

struct Session {
  std::string session_id;
  std::vector<Turn> turns;
  Clock::time_point created_at{};
};

/// 32 lowercase hex chars from 128 random bits.
std::string new_session_id();

/// Last min(max_turns, turns.size()) turns, oldest first.
std::vector<Turn> window(const Session& session, std::size_t max_turns = kDefaultWindow);

/// RFC 3339 UTC with millisecond precision, e.g. "2024-05-01T12:00:00.000Z".
std::string format_utc(Clock::time_point t);
Clock::time_point parse_utc(std::string_view s);

void to_json(nlohmann::json& j, const Turn& t);
void from_json(const nlohmann::json& j, Turn& t);

/// Holds a session's conversation mutex; answers within one session run one at a time.
class ConversationLock {
 public:
  explicit ConversationLock(std::shared_ptr<std::mutex> m) : mutex_(std::move(m)), lock_(*mutex_) {}

 private:
  std::shared_ptr<std::mutex> mutex_;
  std::unique_lock<std::mutex> lock_;
};

/// In-memory session map, optionally mirrored to
/// `{state_dir}/sessions/{session_id}.jsonl` (one Turn per line).
/// Sessions idle for longer than the TTL are dropped.
class SessionStore {
 public:
  SessionStore();
  explicit SessionStore(std::filesystem::path state_dir, std::chrono::seconds idle_ttl = kIdleExpiry);

  Session create_session();

  /// Throws UnknownSession.
  void append_turn(const std::string& session_id, Turn turn);

  /// Throws UnknownSession.
  std::vector<Turn> window(const std::string& session_id, std::size_t max_turns = kDefaultWindow);

  std::optional<Session> get(const std::string& session_id);
  bool contains(const std::string& session_id);

  /// Throws UnknownSession.
  ConversationLock lock_conversation(const std::string& session_id);

  /// Removes sessions idle since before `now - ttl`. Returns how many were dropped.
  std::size_t purge_expired(Clock::time_point now = Clock::now());

  std::size_t size() const;

 private:
  struct Entry {
    Session session;
    Clock::time_point last_active;
    std::shared_ptr<std::mutex> conversation = std::make_shared<std::mutex>();
  };

  // Requires mu_ held. Restores a persisted session on a miss.
  Entry* find_locked(const std::string& session_id);
  std::optional<std::filesystem::path> session_file(const std::string& session_id) const;

  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> sessions_;
  std::optional<std::filesystem::path> state_dir_;
  std::chrono::seconds idle_ttl_;
};

}  // namespace telecomrag::history
