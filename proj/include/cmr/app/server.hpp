#pragma once

#include <memory>
#include <string>

#include "cmr/app/session.hpp"

namespace httplib {
class Server;
}

namespace cmr::app {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string checkpoint;
  StoreOptions store;
};

// Registers the session routes on `server`:
//   POST /api/session               {rule_text, question, scenario}
//   POST /api/session/{id}/answer   {answer}
//   GET  /api/session/{id}
void install_routes(httplib::Server& server, SessionStore& store);

// Blocks serving until the process is stopped.
void serve(const Engine& engine, const ServerConfig& config);

}  // namespace cmr::app
