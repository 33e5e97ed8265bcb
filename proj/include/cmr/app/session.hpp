#pragma once

// In-memory dialog sessions over a shared read-only Engine.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/app/engine.hpp"

namespace cmr::app {

enum class SessionStatus { AwaitingAnswer, Closed };
std::string_view status_name(SessionStatus s);

struct SessionView {
  std::string session_id;
  SessionStatus status = SessionStatus::AwaitingAnswer;
  decision::Decision decision = decision::Decision::Inquire;
  std::optional<std::string> follow_up_question;
  std::vector<ConditionView> conditions;
  std::vector<weak::HistoryTurn> history;

  nlohmann::json to_json() const;
};

// Carries the HTTP status the error maps to.
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct StoreOptions {
  std::size_t max_sessions = 1000;
  double ttl_seconds = 1800;
  std::string log_path;  // append-only JSON lines; empty disables
};

class SessionStore {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  SessionStore(const Engine& engine, StoreOptions options, Clock clock = std::chrono::steady_clock::now,
               std::uint64_t id_seed = std::random_device{}());

  // 400 on an empty rule, 503 when the store is full.
  SessionView create(const std::string& rule_text, const std::string& question, const std::string& scenario);
  // 404 unknown or expired id, 409 closed session, 400 answer not yes/no.
  SessionView answer(const std::string& id, const std::string& answer);
  // 404 unknown or expired id.
  SessionView get(const std::string& id);

  std::size_t size();

 private:
  struct Session {
    std::mutex mutex;
    std::string rule_text, question, scenario;
    SessionView view;
    std::chrono::steady_clock::time_point last_access;
  };

  std::shared_ptr<Session> find(const std::string& id);
  void evict_expired_locked(std::chrono::steady_clock::time_point now);
  void apply(Session& s, const Response& r);
  void log(const nlohmann::json& event);

  const Engine& engine_;
  StoreOptions options_;
  Clock clock_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 id_rng_;
  std::mutex log_mutex_;
  std::ofstream log_;
};

struct ReplayResult {
  std::size_t sessions = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> mismatched_ids;
};

// Re-runs every logged session offline: the same rule, question and scenario,
// then each logged answer in turn, comparing each follow-up and the final
// decision with the log.
ReplayResult replay_sessions(const Engine& engine, const std::vector<nlohmann::json>& events);
std::vector<nlohmann::json> read_session_log(const std::filesystem::path& path);

}  // namespace cmr::app
