#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "aichain/artifact_store.hpp"
#include "aichain/engine.hpp"
#include "aichain/interpreter.hpp"

namespace aichain {

struct ServiceConfig {
  std::filesystem::path store_root = "aichain-store";
  // Value of Access-Control-Allow-Origin; empty disables CORS headers.
  std::string cors_origin = "*";
  std::chrono::seconds idle_timeout{30 * 60};
  // When set, every non code-exec engine answers from this script.
  std::shared_ptr<MockScript> mock_override;
  SessionOptions session_options;
};

// HTTP facade over the artifact store, co-pilots and interpreter sessions.
//
// Routes (JSON bodies unless noted):
//   GET    /projects                      -> ["name", ...]
//   POST   /projects                      project file body -> 201 project
//   GET    /projects/{name}               -> project
//   PUT    /projects/{name}               project file body -> project
//   DELETE /projects/{name}               -> 204
//   POST   /projects/{name}/validate      -> report
//   POST   /projects/{name}/export        -> text/x-python script
//   POST   /projects/{name}/import        {"kind": "prompt"|"engine", "name", "overwrite"}
//   POST   /projects/{name}/sessions      {"mode": "run"|"debug"} -> 201 {"session_id", "status"}
//   GET    /sessions                      -> [session, ...]
//   GET    /sessions/{id}                 -> {"session_id", "project", "mode", "status", ...}
//   GET    /sessions/{id}/events          text/event-stream, `after` query or Last-Event-ID
//   GET    /sessions/{id}/transcript      application/x-ndjson
//   POST   /sessions/{id}/input           {"text"}
//   POST   /sessions/{id}/debug           {"command", "worker_id", "text"}
//   DELETE /sessions/{id}                 abort (when live) and forget
//   GET|PUT /hub/prompts, /hub/engines    whole-collection arrays
//   POST   /copilot/clarify|incorporate|skeleton|assemble
//
// Status codes: 400 malformed request, 404 unknown resource, 409 state
// violation or name clash, 422 validation failure (body carries the report),
// 502 engine failure.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void serve();
  // bind() and serve() on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  ArtifactStore& store();
  EngineGateway& gateway();

  std::size_t session_count() const;
  // Drops sessions idle longer than the configured timeout.
  std::size_t expire_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aichain
