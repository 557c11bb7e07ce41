#include "aichain/service.hpp"

#include <atomic>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include <httplib.h>

#include "aichain/code_export.hpp"
#include "aichain/copilots.hpp"
#include "aichain/serialization.hpp"

namespace aichain {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Status code carried out of a handler.
struct HttpFailure {
  int status;
  json body;
};

const char* kJson = "application/json";

json error_body(std::string_view message) { return {{"error", message}}; }

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json_io::parse(req.body, "request body");
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw InvalidArgument(std::string("field '") + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[24];
  std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

bool is_terminal(SessionStatus s) {
  return s == SessionStatus::finished || s == SessionStatus::failed;
}

struct LiveSession {
  std::string id;
  std::string project;
  Mode mode = Mode::run;

  std::mutex cmd_mu;  // serialises commands in arrival order
  std::optional<Session> session;

  std::mutex ev_mu;
  std::condition_variable cv;
  std::vector<TranscriptEvent> events;
  json snapshot;
  bool terminal = false;
  bool closed = false;
  Clock::time_point last_used = Clock::now();

  void append(const TranscriptEvent& e) {
    {
      std::lock_guard lock(ev_mu);
      events.push_back(e);
    }
    cv.notify_all();
  }

  // Refreshes the status mirror; requires cmd_mu.
  void publish() {
    json s = {{"session_id", id},
              {"project", project},
              {"mode", mode_name(mode)},
              {"status", status_name(session->status())}};
    if (auto p = session->pending_input_prompt()) s["pending_input"] = *p;
    if (auto w = session->current_worker_id()) s["current_worker"] = *w;
    s["cursor"] = session->cursor();
    {
      std::lock_guard lock(ev_mu);
      s["event_count"] = events.size();
      snapshot = std::move(s);
      terminal = is_terminal(session->status());
      last_used = Clock::now();
    }
    cv.notify_all();
  }

  void close() {
    {
      std::lock_guard lock(ev_mu);
      closed = true;
    }
    cv.notify_all();
  }
};

DebugCommand debug_command_from_json(const json& j) {
  const std::string cmd = required_string(j, "command");
  if (cmd == "step") return DebugCommand::step();
  if (cmd == "continue" || cmd == "resume") return DebugCommand::resume();
  if (cmd == "rerun") return DebugCommand::rerun();
  if (cmd == "abort") return DebugCommand::abort();
  if (cmd == "edit_prompt") {
    return DebugCommand::edit_prompt(required_string(j, "worker_id"), required_string(j, "text"));
  }
  throw InvalidArgument("unknown debug command '" + cmd + "'");
}

copilot::Conversation conversation_from_json(const json& j) {
  copilot::Conversation conv;
  if (j.is_null()) return conv;
  if (!j.is_array()) throw InvalidArgument("conversation must be an array");
  for (const auto& t : j) {
    const std::string role = required_string(t, "role");
    copilot::Turn turn;
    if (role == "user") {
      turn.role = copilot::Turn::Role::user;
    } else if (role == "copilot") {
      turn.role = copilot::Turn::Role::copilot;
    } else {
      throw InvalidArgument("conversation role must be 'user' or 'copilot'");
    }
    turn.text = required_string(t, "text");
    conv.turns.push_back(std::move(turn));
  }
  return conv;
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  ArtifactStore store;
  std::shared_ptr<EngineGateway> gateway = std::make_shared<EngineGateway>();
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  mutable std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions;

  explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.store_root) {
    store.register_mocks(*gateway);
    if (config.mock_override) gateway->set_override(config.mock_override);
    install_routes();
  }

  std::shared_ptr<LiveSession> find_session(const std::string& id) const {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
  }

  std::size_t expire_idle() {
    const auto cutoff = Clock::now() - config.idle_timeout;
    std::vector<std::shared_ptr<LiveSession>> dropped;
    {
      std::lock_guard lock(sessions_mu);
      for (auto it = sessions.begin(); it != sessions.end();) {
        bool idle;
        {
          std::lock_guard ev(it->second->ev_mu);
          idle = it->second->last_used < cutoff;
        }
        if (idle) {
          dropped.push_back(it->second);
          it = sessions.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& s : dropped) s->close();
    return dropped.size();
  }

  EngineConfig resolve_engine(const json& body) const {
    if (!body.contains("engine")) throw InvalidArgument("field 'engine' is required");
    const json& e = body.at("engine");
    if (e.is_string()) return store.engines().load_engine(e.get<std::string>());
    return json_io::engine_from_json(e, "engine");
  }

  // Maps library failures onto HTTP statuses.
  template <typename Fn>
  httplib::Server::Handler wrap(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ValidationFailed& e) {
        json body = error_body(e.what());
        body["report"] = json_io::to_json(e.report());
        reply(res, 422, body);
      } catch (const NotFound& e) {
        reply(res, 404, error_body(e.what()));
      } catch (const Conflict& e) {
        reply(res, 409, error_body(e.what()));
      } catch (const ProtocolError& e) {
        reply(res, 409, error_body(e.what()));
      } catch (const EngineError& e) {
        reply(res, 502, error_body(e.what()));
      } catch (const copilot::SkeletonParseError& e) {
        json body = error_body(e.what());
        body["raw"] = e.raw();
        reply(res, 502, body);
      } catch (const InvalidArgument& e) {
        reply(res, 400, error_body(e.what()));
      } catch (const Error& e) {
        reply(res, 500, error_body(e.what()));
      } catch (const std::exception& e) {
        reply(res, 500, error_body(e.what()));
      }
    };
  }

  void install_routes() {
    auto& s = server;

    s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      expire_idle();
      if (!config.cors_origin.empty()) {
        res.set_header("Access-Control-Allow-Origin", config.cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
      }
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    // Projects.
    s.Get("/projects", wrap([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, store.list_projects());
    }));
    s.Post("/projects", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto saved = store.put_project(load_project(req.body), true);
      res.status = 201;
      res.set_content(save_project(saved), kJson);
    }));
    s.Get("/projects/:name", wrap([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(save_project(store.get_project(req.path_params.at("name"))), kJson);
    }));
    s.Put("/projects/:name", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto record = load_project(req.body);
      if (record.name() != req.path_params.at("name")) {
        throw InvalidArgument("project name in body does not match the path");
      }
      res.set_content(save_project(store.put_project(std::move(record))), kJson);
    }));
    s.Delete("/projects/:name", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& name = req.path_params.at("name");
      if (!store.delete_project(name)) throw NotFound("unknown project '" + name + "'");
      res.status = 204;
    }));
    s.Post("/projects/:name/validate",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             auto record = store.get_project(req.path_params.at("name"));
             reply(res, 200, json_io::to_json(record.validate()));
           }));
    s.Post("/projects/:name/export",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             auto record = store.get_project(req.path_params.at("name"));
             res.set_content(export_code(record), "text/x-python");
           }));
    s.Post("/projects/:name/import",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             const json body = body_json(req);
             const std::string kind = required_string(body, "kind");
             const std::string name = required_string(body, "name");
             const bool overwrite = field<bool>(body, "overwrite", false);
             auto record = store.get_project(req.path_params.at("name"));
             if (kind == "prompt") {
               record = import_prompt(store.prompts(), name, std::move(record), overwrite);
             } else if (kind == "engine") {
               record = import_engine(store.engines(), name, std::move(record), overwrite);
             } else {
               throw InvalidArgument("import kind must be 'prompt' or 'engine'");
             }
             res.set_content(save_project(store.put_project(std::move(record))), kJson);
           }));

    // Sessions.
    s.Post("/projects/:name/sessions",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             const json body = body_json(req);
             const std::string mode_text = field<std::string>(body, "mode", "run");
             auto mode = parse_mode(mode_text);
             if (!mode) throw InvalidArgument("mode must be 'run' or 'debug'");
             auto record =
                 std::make_shared<const ProjectRecord>(store.get_project(req.path_params.at("name")));

             auto live = std::make_shared<LiveSession>();
             live->id = new_session_id();
             live->project = record->name();
             live->mode = *mode;
             LiveSession* raw = live.get();
             {
               std::lock_guard cmd(live->cmd_mu);
               live->session.emplace(Session::start(record, *mode, gateway, config.session_options,
                                                    [raw](const TranscriptEvent& e) { raw->append(e); }));
               live->publish();
             }
             {
               std::lock_guard lock(sessions_mu);
               sessions[live->id] = live;
             }
             json out;
             {
               std::lock_guard ev(live->ev_mu);
               out = live->snapshot;
             }
             reply(res, 201, out);
           }));
    s.Get("/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      std::lock_guard lock(sessions_mu);
      for (const auto& [_, live] : sessions) {
        std::lock_guard ev(live->ev_mu);
        out.push_back(live->snapshot);
      }
      reply(res, 200, out);
    }));
    s.Get("/sessions/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto live = find_session(req.path_params.at("id"));
      std::lock_guard ev(live->ev_mu);
      reply(res, 200, live->snapshot);
    }));
    s.Get("/sessions/:id/transcript",
          wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto live = find_session(req.path_params.at("id"));
            std::lock_guard ev(live->ev_mu);
            res.set_content(transcript_to_jsonl(live->events), "application/x-ndjson");
          }));
    s.Get("/sessions/:id/events", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto live = find_session(req.path_params.at("id"));
      std::uint64_t after = 0;
      const std::string cursor = req.has_param("after") ? req.get_param_value("after")
                                                        : req.get_header_value("Last-Event-ID");
      if (!cursor.empty()) {
        try {
          after = std::stoull(cursor);
        } catch (const std::exception&) {
          throw InvalidArgument("event cursor must be a sequence number");
        }
      }
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, live, next = static_cast<std::size_t>(after)](std::size_t,
                                                               httplib::DataSink& sink) mutable {
            std::unique_lock lock(live->ev_mu);
            live->cv.wait_for(lock, std::chrono::milliseconds(200), [&] {
              return next < live->events.size() || live->terminal || live->closed ||
                     stopping.load();
            });
            std::string frames;
            for (; next < live->events.size(); ++next) {
              const auto& e = live->events[next];
              frames += "event: transcript\nid: " + std::to_string(e.seq) +
                        "\ndata: " + event_to_json_line(e) + "\n\n";
            }
            const bool end = live->terminal || live->closed || stopping.load();
            std::string status = live->snapshot.value("status", "");
            lock.unlock();
            if (!frames.empty() && !sink.write(frames.data(), frames.size())) return false;
            if (end) {
              const std::string tail = "event: end\ndata: " + json{{"status", status}}.dump() + "\n\n";
              sink.write(tail.data(), tail.size());
              sink.done();
              return true;
            }
            return sink.is_writable();
          });
    }));
    s.Post("/sessions/:id/input", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto live = find_session(req.path_params.at("id"));
      const std::string text = required_string(body_json(req), "text");
      std::lock_guard cmd(live->cmd_mu);
      live->session->feed_input(text);
      live->publish();
      std::lock_guard ev(live->ev_mu);
      reply(res, 200, live->snapshot);
    }));
    s.Post("/sessions/:id/debug", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto live = find_session(req.path_params.at("id"));
      const DebugCommand command = debug_command_from_json(body_json(req));
      std::lock_guard cmd(live->cmd_mu);
      live->session->debug(command);
      live->publish();
      std::lock_guard ev(live->ev_mu);
      reply(res, 200, live->snapshot);
    }));
    s.Delete("/sessions/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      auto live = find_session(req.path_params.at("id"));
      {
        std::lock_guard cmd(live->cmd_mu);
        if (!is_terminal(live->session->status())) {
          live->session->debug(DebugCommand::abort());
          live->publish();
        }
      }
      {
        std::lock_guard lock(sessions_mu);
        sessions.erase(live->id);
      }
      live->close();
      std::lock_guard ev(live->ev_mu);
      reply(res, 200, live->snapshot);
    }));

    // Prompt Hub and engine registry.
    s.Get("/hub/prompts", wrap([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, json_io::prompts_to_json(store.prompts().list()));
    }));
    s.Put("/hub/prompts", wrap([this](const httplib::Request& req, httplib::Response& res) {
      store.prompts().replace_all(json_io::prompts_from_json(body_json(req)));
      reply(res, 200, json_io::prompts_to_json(store.prompts().list()));
    }));
    s.Get("/hub/engines", wrap([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, json_io::engines_to_json(store.engines().list_engines()));
    }));
    s.Put("/hub/engines", wrap([this](const httplib::Request& req, httplib::Response& res) {
      store.engines().replace_all(json_io::engines_from_json(body_json(req)));
      reply(res, 200, json_io::engines_to_json(store.engines().list_engines()));
    }));

    // Co-pilots.
    s.Post("/copilot/clarify", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      const std::string question = copilot::clarify(
          required_string(body, "task_description"),
          conversation_from_json(body.value("conversation", json())), resolve_engine(body),
          *gateway);
      reply(res, 200, {{"question", question}});
    }));
    s.Post("/copilot/incorporate",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             const json body = body_json(req);
             const std::string updated = copilot::incorporate(
                 required_string(body, "task_description"), required_string(body, "question"),
                 required_string(body, "answer"), resolve_engine(body), *gateway);
             reply(res, 200, {{"task_description", updated}});
           }));
    s.Post("/copilot/skeleton", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      auto draft = copilot::generate_skeleton(required_string(body, "task_description"),
                                              resolve_engine(body), *gateway);
      reply(res, 200,
            {{"skeleton", copilot::to_json(draft.skeleton)}, {"repair_rounds", draft.repair_rounds}});
    }));
    s.Post("/copilot/assemble", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      if (!body.contains("skeleton")) throw InvalidArgument("field 'skeleton' is required");
      const auto skeleton = copilot::skeleton_from_json(body.at("skeleton"));
      const std::string default_engine =
          field<std::string>(body, "default_engine", "default_engine");
      auto assembled = copilot::skeleton_to_program(skeleton, default_engine);
      ProjectRecord record;
      record.program = std::move(assembled.program);
      record.program.name = field<std::string>(body, "name", "untitled");
      record.prompts = std::move(assembled.prompts);
      NameSet wanted{default_engine};
      for (const auto& step : skeleton.steps) {
        if (step.engine_ref) wanted.insert(*step.engine_ref);
      }
      for (const auto& name : wanted) {
        if (store.engines().contains(name)) record.engines.push_back(store.engines().load_engine(name));
      }
      json out = json_io::parse(save_project(record), "project");
      reply(res, 200, {{"project", out}, {"report", json_io::to_json(record.validate())}});
    }));
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::serve() { impl_->server.listen_after_bind(); }

int Service::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::stop() {
  impl_->stopping = true;
  {
    std::lock_guard lock(impl_->sessions_mu);
    for (auto& [_, live] : impl_->sessions) live->cv.notify_all();
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

ArtifactStore& Service::store() { return impl_->store; }

EngineGateway& Service::gateway() { return *impl_->gateway; }

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->sessions_mu);
  return impl_->sessions.size();
}

std::size_t Service::expire_idle() { return impl_->expire_idle(); }

}  // namespace aichain
