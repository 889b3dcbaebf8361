#include "telecomrag/history.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/text.hpp"

namespace fs = std::filesystem;

namespace telecomrag::history {
namespace {

bool is_hex_id(std::string_view id) {
  return id.size() == 32 &&
         std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

}  // namespace

std::string new_session_id() {
  static thread_local std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }();
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return std::string(buf, 32);
}

std::vector<Turn> window(const Session& session, std::size_t max_turns) {
  const std::size_t n = std::min(max_turns, session.turns.size());
  return {session.turns.end() - static_cast<std::ptrdiff_t>(n), session.turns.end()};
}

std::string format_utc(Clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms >= 0 ? ms / 1000 : (ms - 999) / 1000);
  const int millis = static_cast<int>(ms - static_cast<long long>(secs) * 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

Clock::time_point parse_utc(std::string_view s) {
  std::tm tm{};
  int millis = 0;
  const std::string str(s);
  const int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                            &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis);
  if (n < 6) throw InvalidParams("bad UTC timestamp: " + str);
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return Clock::time_point(std::chrono::seconds(secs)) + std::chrono::milliseconds(n == 7 ? millis : 0);
}

void to_json(nlohmann::json& j, const Turn& t) {
  j = nlohmann::json{{"query", t.query},
                     {"answer", t.answer},
                     {"references", t.references},
                     {"timestamp", format_utc(t.timestamp)}};
}

void from_json(const nlohmann::json& j, Turn& t) {
  j.at("query").get_to(t.query);
  t.answer = j.value("answer", std::string{});
  t.references = j.value("references", std::vector<std::string>{});
  t.timestamp = parse_utc(j.at("timestamp").get<std::string>());
}

SessionStore::SessionStore() : idle_ttl_(kIdleExpiry) {}

SessionStore::SessionStore(fs::path state_dir, std::chrono::seconds idle_ttl)
    : state_dir_(std::move(state_dir)), idle_ttl_(idle_ttl) {
  std::error_code ec;
  fs::create_directories(*state_dir_ / "sessions", ec);
  if (ec) throw IoError("cannot create session directory: " + ec.message());
}

std::optional<fs::path> SessionStore::session_file(const std::string& session_id) const {
  if (!state_dir_ || !is_hex_id(session_id)) return std::nullopt;
  return *state_dir_ / "sessions" / (session_id + ".jsonl");
}

SessionStore::Entry* SessionStore::find_locked(const std::string& session_id) {
  if (auto it = sessions_.find(session_id); it != sessions_.end()) {
    if (Clock::now() - it->second.last_active > idle_ttl_) {
      sessions_.erase(it);
      if (auto file = session_file(session_id)) {
        std::error_code ec;
        fs::remove(*file, ec);
      }
      return nullptr;
    }
    return &it->second;
  }

  const auto file = session_file(session_id);
  std::error_code ec;
  if (!file || !fs::exists(*file, ec)) return nullptr;
  const auto mtime = fs::last_write_time(*file, ec);
  if (!ec) {
    const auto age = fs::file_time_type::clock::now() - mtime;
    if (age > idle_ttl_) return nullptr;
  }
  Entry entry;
  entry.session.session_id = session_id;
  entry.last_active = Clock::now();
  std::ifstream in(*file);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      entry.session.turns.push_back(nlohmann::json::parse(line).get<Turn>());
    } catch (const std::exception&) {
      // A torn final line from a crash mid-append; keep what parsed.
      break;
    }
  }
  entry.session.created_at = entry.session.turns.empty() ? entry.last_active : entry.session.turns.front().timestamp;
  return &sessions_.emplace(session_id, std::move(entry)).first->second;
}

Session SessionStore::create_session() {
  purge_expired();
  std::lock_guard lock(mu_);
  Entry entry;
  do {
    entry.session.session_id = new_session_id();
  } while (sessions_.count(entry.session.session_id) != 0);
  entry.session.created_at = Clock::now();
  entry.last_active = entry.session.created_at;
  if (auto file = session_file(entry.session.session_id)) {
    std::ofstream out(*file, std::ios::trunc);
    if (!out) throw IoError("cannot create session file: " + file->string());
  }
  Session copy = entry.session;
  sessions_.emplace(copy.session_id, std::move(entry));
  return copy;
}

void SessionStore::append_turn(const std::string& session_id, Turn turn) {
  std::lock_guard lock(mu_);
  Entry* entry = find_locked(session_id);
  if (entry == nullptr) throw UnknownSession(session_id);
  if (auto file = session_file(session_id)) {
    std::ofstream out(*file, std::ios::app);
    out << nlohmann::json(turn).dump() << '\n';
    if (!out) throw IoError("cannot append to session file: " + file->string());
  }
  entry->session.turns.push_back(std::move(turn));
  entry->last_active = Clock::now();
}

std::vector<Turn> SessionStore::window(const std::string& session_id, std::size_t max_turns) {
  std::lock_guard lock(mu_);
  Entry* entry = find_locked(session_id);
  if (entry == nullptr) throw UnknownSession(session_id);
  entry->last_active = Clock::now();
  return history::window(entry->session, max_turns);
}

std::optional<Session> SessionStore::get(const std::string& session_id) {
  std::lock_guard lock(mu_);
  Entry* entry = find_locked(session_id);
  if (entry == nullptr) return std::nullopt;
  return entry->session;
}

bool SessionStore::contains(const std::string& session_id) {
  std::lock_guard lock(mu_);
  return find_locked(session_id) != nullptr;
}

ConversationLock SessionStore::lock_conversation(const std::string& session_id) {
  std::shared_ptr<std::mutex> m;
  {
    std::lock_guard lock(mu_);
    Entry* entry = find_locked(session_id);
    if (entry == nullptr) throw UnknownSession(session_id);
    m = entry->conversation;
  }
  return ConversationLock(std::move(m));
}

std::size_t SessionStore::purge_expired(Clock::time_point now) {
  std::lock_guard lock(mu_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second.last_active > idle_ttl_) {
      if (auto file = session_file(it->first)) {
        std::error_code ec;
        fs::remove(*file, ec);
      }
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

}  // namespace telecomrag::history
