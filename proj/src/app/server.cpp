#include "cmr/app/server.hpp"

#include <iostream>

#include <httplib.h>

namespace cmr::app {

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

void send_view(httplib::Response& res, const SessionView& view) {
  res.status = 200;
  res.set_content(view.to_json().dump(), "application/json");
}

std::string string_field(const nlohmann::json& body, const char* name, bool required) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) {
    if (required) throw SessionError(400, std::string("missing field '") + name + "'");
    return {};
  }
  if (!it->is_string()) throw SessionError(400, std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

template <typename Handler>
void guarded(httplib::Response& res, Handler handler) {
  try {
    handler();
  } catch (const SessionError& e) {
    send_error(res, e.status(), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, std::string("malformed JSON body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  nlohmann::json body = nlohmann::json::parse(req.body);
  if (!body.is_object()) throw SessionError(400, "request body must be a JSON object");
  return body;
}

}  // namespace

void install_routes(httplib::Server& server, SessionStore& store) {
  server.Post("/api/session", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      send_view(res, store.create(string_field(body, "rule_text", true), string_field(body, "question", false),
                                  string_field(body, "scenario", false)));
    });
  });
  server.Post(R"(/api/session/([0-9a-f]+)/answer)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      send_view(res, store.answer(req.matches[1], string_field(body, "answer", true)));
    });
  });
  server.Get(R"(/api/session/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_view(res, store.get(req.matches[1])); });
  });
}

void serve(const Engine& engine, const ServerConfig& config) {
  SessionStore store(engine, config.store);
  httplib::Server server;
  install_routes(server, store);
  std::cerr << "listening on " << config.host << ":" << config.port << '\n';
  if (!server.listen(config.host, config.port)) throw std::runtime_error("cannot listen on " + config.host + ":" + std::to_string(config.port));
}

}  // namespace cmr::app
