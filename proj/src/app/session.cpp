#include "cmr/app/session.hpp"

#include <iomanip>
#include <sstream>

namespace cmr::app {

using decision::Decision;

std::string_view status_name(SessionStatus s) { return s == SessionStatus::Closed ? "closed" : "awaiting_answer"; }

nlohmann::json SessionView::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions) {
    conds.push_back({{"text", c.text}, {"entailment_state", weak::label_name(c.state)}, {"attention_weight", c.weight}});
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& t : history) hist.push_back({{"follow_up_question", t.follow_up_question}, {"follow_up_answer", weak::answer_name(t.answer)}});
  nlohmann::json j = {{"session_id", session_id},
                      {"status", status_name(status)},
                      {"decision", decision::decision_name(decision)},
                      {"conditions", conds},
                      {"history", hist}};
  if (follow_up_question) j["follow_up_question"] = *follow_up_question;
  return j;
}

SessionStore::SessionStore(const Engine& engine, StoreOptions options, Clock clock, std::uint64_t id_seed)
    : engine_(engine), options_(std::move(options)), clock_(std::move(clock)), id_rng_(id_seed) {
  if (options_.max_sessions == 0) throw std::invalid_argument("max_sessions must be at least 1");
  if (!options_.log_path.empty()) {
    log_.open(options_.log_path, std::ios::app);
    if (!log_) throw std::runtime_error("cannot open session log " + options_.log_path);
  }
}

void SessionStore::log(const nlohmann::json& event) {
  if (!log_.is_open()) return;
  std::lock_guard lock(log_mutex_);
  log_ << event.dump() << '\n';
  log_.flush();
}

void SessionStore::evict_expired_locked(std::chrono::steady_clock::time_point now) {
  const auto ttl = std::chrono::duration<double>(options_.ttl_seconds);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_access > ttl) it = sessions_.erase(it);
    else ++it;
  }
}

void SessionStore::apply(Session& s, const Response& r) {
  s.view.decision = r.decision;
  s.view.conditions = r.conditions;
  if (r.decision == Decision::Inquire) {
    s.view.status = SessionStatus::AwaitingAnswer;
    s.view.follow_up_question = r.follow_up;
  } else {
    s.view.status = SessionStatus::Closed;
    s.view.follow_up_question.reset();
  }
}

SessionView SessionStore::create(const std::string& rule_text, const std::string& question, const std::string& scenario) {
  if (encoder::tokenize(rule_text).empty()) throw SessionError(400, "rule_text must not be empty");
  auto session = std::make_shared<Session>();
  session->rule_text = rule_text;
  session->question = question;
  session->scenario = scenario;
  Response r;
  try {
    r = engine_.respond(rule_text, question, scenario, {});
  } catch (const std::invalid_argument& e) {
    throw SessionError(400, e.what());
  }
  apply(*session, r);

  std::string id;
  {
    std::lock_guard lock(mutex_);
    const auto now = clock_();
    evict_expired_locked(now);
    if (sessions_.size() >= options_.max_sessions) throw SessionError(503, "session limit reached");
    do {
      std::ostringstream os;
      os << std::hex << std::setfill('0') << std::setw(16) << id_rng_() << std::setw(16) << id_rng_();
      id = os.str();
    } while (sessions_.count(id) != 0);
    session->view.session_id = id;
    session->last_access = now;
    sessions_[id] = session;
  }
  nlohmann::json event = {{"event", "create"},     {"session_id", id},       {"rule_text", rule_text},
                          {"question", question}, {"scenario", scenario},   {"decision", decision::decision_name(r.decision)}};
  if (r.follow_up) event["follow_up"] = *r.follow_up;
  log(event);
  std::lock_guard lock(session->mutex);
  return session->view;
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  evict_expired_locked(now);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(404, "unknown session " + id);
  it->second->last_access = now;
  return it->second;
}

SessionView SessionStore::answer(const std::string& id, const std::string& answer_text) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  if (session->view.status == SessionStatus::Closed) throw SessionError(409, "session " + id + " is closed");
  weak::Answer a;
  try {
    a = weak::parse_answer(answer_text);
  } catch (const std::invalid_argument& e) {
    throw SessionError(400, e.what());
  }
  // The asked follow-up is recorded verbatim as the turn text.
  session->view.history.push_back({session->view.follow_up_question.value_or(""), a});
  const Response r = engine_.respond(session->rule_text, session->question, session->scenario, session->view.history);
  apply(*session, r);
  nlohmann::json event = {{"event", "answer"}, {"session_id", id}, {"answer", weak::answer_name(a)},
                          {"decision", decision::decision_name(r.decision)}};
  if (r.follow_up) event["follow_up"] = *r.follow_up;
  log(event);
  return session->view;
}

SessionView SessionStore::get(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return session->view;
}

std::size_t SessionStore::size() {
  std::lock_guard lock(mutex_);
  evict_expired_locked(clock_());
  return sessions_.size();
}

std::vector<nlohmann::json> read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read session log " + path.string());
  std::vector<nlohmann::json> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return events;
}

ReplayResult replay_sessions(const Engine& engine, const std::vector<nlohmann::json>& events) {
  struct Logged {
    nlohmann::json create;
    std::vector<nlohmann::json> answers;
  };
  std::vector<std::string> order;
  std::map<std::string, Logged> sessions;
  for (const auto& e : events) {
    const std::string id = e.at("session_id");
    if (e.at("event") == "create") {
      order.push_back(id);
      sessions[id].create = e;
    } else {
      sessions.at(id).answers.push_back(e);
    }
  }
  auto outcome = [](const Response& r) {
    nlohmann::json j = {{"decision", decision::decision_name(r.decision)}};
    if (r.follow_up) j["follow_up"] = *r.follow_up;
    return j;
  };
  auto logged = [](const nlohmann::json& e) {
    nlohmann::json j = {{"decision", e.at("decision")}};
    if (e.contains("follow_up")) j["follow_up"] = e.at("follow_up");
    return j;
  };
  ReplayResult result;
  for (const auto& id : order) {
    const Logged& s = sessions.at(id);
    ++result.sessions;
    const std::string rule = s.create.at("rule_text"), question = s.create.at("question"), scenario = s.create.at("scenario");
    std::vector<weak::HistoryTurn> history;
    Response r = engine.respond(rule, question, scenario, history);
    bool same = outcome(r) == logged(s.create);
    for (const auto& a : s.answers) {
      if (!same) break;
      history.push_back({r.follow_up.value_or(""), weak::parse_answer(a.at("answer").get<std::string>())});
      r = engine.respond(rule, question, scenario, history);
      same = outcome(r) == logged(a);
    }
    if (!same) {
      ++result.mismatches;
      result.mismatched_ids.push_back(id);
    }
  }
  return result;
}

}  // namespace cmr::app
