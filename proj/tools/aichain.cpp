// Command-line front end: validate, run, debug, export-code, hub, engines, serve.
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure, 3 I/O or
// malformed input.

#include <csignal>
#include <deque>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "aichain/artifact_store.hpp"
#include "aichain/code_export.hpp"
#include "aichain/interpreter.hpp"
#include "aichain/project.hpp"
#include "aichain/serialization.hpp"
#include "aichain/service.hpp"

namespace {

using namespace aichain;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIo = 3;

std::shared_ptr<const ProjectRecord> load_project_file(const std::string& path) {
  return std::make_shared<const ProjectRecord>(load_project(read_file(path)));
}

std::shared_ptr<EngineGateway> make_gateway(const std::string& mock, const std::string& mocks_dir) {
  auto gateway = std::make_shared<EngineGateway>();
  if (!mocks_dir.empty()) {
    for (const auto& entry : std::filesystem::directory_iterator(mocks_dir)) {
      if (entry.path().extension() != ".json") continue;
      gateway->register_mock(entry.path().stem().string(),
                             std::make_shared<MockScript>(json_io::mock_from_json(
                                 json_io::parse(read_file(entry.path()), entry.path().string()))));
    }
  }
  if (!mock.empty()) {
    gateway->set_override(std::make_shared<MockScript>(
        json_io::mock_from_json(json_io::parse(read_file(mock), mock))));
  }
  return gateway;
}

void print_human(const TranscriptEvent& e) {
  switch (e.kind) {
    case EventKind::output_window:
      std::cout << e.payload << '\n' << std::flush;
      return;
    case EventKind::console_output:
      std::cerr << e.payload << '\n';
      return;
    case EventKind::finished:
      std::cerr << "[finished]\n";
      return;
    default:
      break;
  }
  std::cerr << '[' << event_kind_name(e.kind);
  if (e.attempt > 1) std::cerr << " #" << e.attempt;
  std::cerr << "] ";
  if (!e.unit_id.empty()) std::cerr << e.unit_id << ": ";
  std::cerr << e.payload << '\n';
}

// Supplies console input: queued --input values first, then stdin lines.
class InputSource {
 public:
  explicit InputSource(std::vector<std::string> values) : queue_(values.begin(), values.end()) {}

  std::optional<std::string> next(const std::string& prompt) {
    if (!queue_.empty()) {
      auto v = std::move(queue_.front());
      queue_.pop_front();
      return v;
    }
    std::cerr << prompt << "> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return std::nullopt;
    return line;
  }

 private:
  std::deque<std::string> queue_;
};

bool feed_pending(Session& session, InputSource& inputs) {
  while (session.status() == SessionStatus::awaiting_input) {
    auto text = inputs.next(session.pending_input_prompt().value_or("input"));
    if (!text) return false;
    session.feed_input(*text);
  }
  return true;
}

int report_validation(const ValidationFailed& e) {
  std::cerr << e.report().to_string();
  return kExitValidation;
}

int cmd_validate(const std::string& path) {
  const auto record = load_project_file(path);
  const auto report = record->validate();
  std::cout << report.to_string();
  if (report.diagnostics.empty()) std::cout << "ok\n";
  return report.valid() ? 0 : kExitValidation;
}

struct RunArgs {
  std::string project;
  std::vector<std::string> inputs;
  std::string mock;
  std::string mocks_dir;
  bool json = false;
  std::size_t max_loop = 10000;
};

int cmd_run(const RunArgs& args) {
  auto record = load_project_file(args.project);
  auto gateway = make_gateway(args.mock, args.mocks_dir);
  InputSource inputs(args.inputs);
  Session::EventSink sink;
  if (args.json) {
    sink = [](const TranscriptEvent& e) { std::cout << event_to_json_line(e) << '\n' << std::flush; };
  } else {
    sink = print_human;
  }
  try {
    auto session = Session::start(record, Mode::run, gateway, {args.max_loop}, sink);
    if (!feed_pending(session, inputs)) {
      std::cerr << "error: input required but stdin is exhausted\n";
      return kExitRuntime;
    }
    return session.status() == SessionStatus::finished ? 0 : kExitRuntime;
  } catch (const ValidationFailed& e) {
    return report_validation(e);
  }
}

std::vector<std::string> split_words(const std::string& line, std::size_t max_fields) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size() && out.size() + 1 < max_fields) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  if (i < line.size()) out.push_back(line.substr(i));
  return out;
}

int cmd_debug(const RunArgs& args) {
  auto record = load_project_file(args.project);
  auto gateway = make_gateway(args.mock, args.mocks_dir);
  InputSource inputs(args.inputs);
  auto sink = [&](const TranscriptEvent& e) {
    if (e.kind == EventKind::suspended) {
      std::cout << "-- suspended after " << e.payload << " (" << e.unit_id << ") --\n" << std::flush;
      return;
    }
    if (e.kind == EventKind::finished) {
      std::cout << "finished\n" << std::flush;
      return;
    }
    print_human(e);
  };
  try {
    auto session = Session::start(record, Mode::debug, gateway, {args.max_loop}, sink);
    std::string line;
    while (true) {
      if (!feed_pending(session, inputs)) return kExitRuntime;
      const auto status = session.status();
      if (status == SessionStatus::finished) return 0;
      if (status == SessionStatus::failed) return kExitRuntime;
      std::cout << "(debug) " << std::flush;
      if (!std::getline(std::cin, line)) {
        session.debug(DebugCommand::abort());
        return kExitRuntime;
      }
      const auto words = split_words(line, 3);
      if (words.empty()) continue;
      try {
        const auto& cmd = words[0];
        if (cmd == "step" || cmd == "s") {
          session.debug(DebugCommand::step());
        } else if (cmd == "continue" || cmd == "c") {
          session.debug(DebugCommand::resume());
        } else if (cmd == "rerun" || cmd == "r") {
          session.debug(DebugCommand::rerun());
        } else if (cmd == "abort" || cmd == "q") {
          session.debug(DebugCommand::abort());
        } else if (cmd == "edit" && words.size() == 3) {
          session.debug(DebugCommand::edit_prompt(words[1], words[2]));
          std::cout << "prompt for " << words[1] << " updated\n";
        } else if (cmd == "where") {
          for (const auto& id : session.cursor()) std::cout << "  " << id << '\n';
        } else {
          std::cout << "commands: step, continue, edit <worker> <text>, rerun, abort, where\n";
        }
      } catch (const ProtocolError& e) {
        std::cout << "error: " << e.what() << '\n';
      }
    }
  } catch (const ValidationFailed& e) {
    return report_validation(e);
  }
}

int cmd_export(const std::string& project, const std::string& out) {
  const auto record = load_project_file(project);
  try {
    const std::string code = export_code(*record);
    if (out.empty() || out == "-") {
      std::cout << code;
    } else {
      write_file_atomic(out, code);
      std::filesystem::permissions(out, std::filesystem::perms::owner_exec,
                                   std::filesystem::perm_options::add);
    }
    return 0;
  } catch (const ValidationFailed& e) {
    return report_validation(e);
  }
}

std::vector<nlohmann::json> json_items(const std::string& path) {
  auto j = json_io::parse(read_file(path), path);
  if (j.is_array()) return j.get<std::vector<nlohmann::json>>();
  return {j};
}

std::string default_store_root() {
  if (const char* env = std::getenv("AICHAIN_STORE")) return env;
  return "aichain-store";
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, run, debug and serve prompt-driven AI chains"};
  app.require_subcommand(1);
  std::string store_root = default_store_root();
  app.add_option("--store-root", store_root, "Artifact store directory (env AICHAIN_STORE)");

  std::string project;
  RunArgs run_args;
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("project", run_args.project, "Project JSON file")->required();
    sub->add_option("--input,-i", run_args.inputs, "Console input value, consumed in order");
    sub->add_option("--mock", run_args.mock, "MockScript fixture answering every model engine");
    sub->add_option("--mocks-dir", run_args.mocks_dir,
                    "Directory of <ref>.json fixtures for mock engines");
    sub->add_option("--max-loop", run_args.max_loop, "Loop iteration cap");
  };

  auto* validate = app.add_subcommand("validate", "Check a project and print diagnostics");
  validate->add_option("project", project, "Project JSON file")->required();

  auto* run = app.add_subcommand("run", "Execute a project");
  add_run_options(run);
  run->add_flag("--json", run_args.json, "Emit the transcript as JSON lines");

  auto* debug = app.add_subcommand("debug", "Step through a project interactively");
  add_run_options(debug);

  std::string out;
  auto* exp = app.add_subcommand("export-code", "Emit a standalone Python script");
  exp->add_option("project", project, "Project JSON file")->required();
  exp->add_option("-o,--output", out, "Output file (stdout when omitted)");

  auto* hub = app.add_subcommand("hub", "Prompt Hub");
  hub->require_subcommand(1);
  auto* prompts = hub->add_subcommand("prompts", "Reusable prompts");
  prompts->require_subcommand(1);
  auto* p_list = prompts->add_subcommand("list", "List hub prompts");
  std::string file;
  bool overwrite = false;
  auto* p_add = prompts->add_subcommand("add", "Add prompts from a JSON file (object or array)");
  p_add->add_option("file", file)->required();
  p_add->add_flag("--overwrite", overwrite);
  std::string name;
  auto* p_export = prompts->add_subcommand("export", "Print one hub prompt as JSON");
  p_export->add_option("name", name)->required();
  p_export->add_option("-o,--output", out);
  auto* p_import = prompts->add_subcommand("import", "Copy a hub prompt into a project file");
  p_import->add_option("name", name)->required();
  p_import->add_option("project", project)->required();
  p_import->add_flag("--overwrite", overwrite);
  auto* p_publish = prompts->add_subcommand("publish", "Copy a project prompt into the hub");
  p_publish->add_option("name", name)->required();
  p_publish->add_option("project", project)->required();
  p_publish->add_flag("--overwrite", overwrite);

  auto* engines = app.add_subcommand("engines", "Engine registry");
  engines->require_subcommand(1);
  auto* e_list = engines->add_subcommand("list", "List registered engines");
  auto* e_add = engines->add_subcommand("add", "Register engines from a JSON file");
  e_add->add_option("file", file)->required();

  ServiceConfig service_config;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string mock;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", port)->envname("AICHAIN_PORT");
  serve->add_option("--host", host);
  serve->add_option("--cors-origin", service_config.cors_origin);
  serve->add_option("--mock", mock, "MockScript fixture answering every model engine");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(project);
    if (*run) return cmd_run(run_args);
    if (*debug) return cmd_debug(run_args);
    if (*exp) return cmd_export(project, out);

    if (*hub) {
      PromptHub store(std::filesystem::path(store_root) / "hub" / "prompts.json");
      if (*p_list) {
        for (const auto& p : store.list()) std::cout << p.name << '\n';
      } else if (*p_add) {
        for (const auto& item : json_items(file)) store.put(json_io::prompt_from_json(item), overwrite);
      } else if (*p_export) {
        const std::string text = json_io::to_json(store.get(name)).dump(2) + "\n";
        if (out.empty()) {
          std::cout << text;
        } else {
          write_file_atomic(out, text);
        }
      } else if (*p_import) {
        auto record = import_prompt(store, name, load_project(read_file(project)), overwrite);
        write_file_atomic(project, save_project(record));
      } else if (*p_publish) {
        export_prompt(load_project(read_file(project)), name, store, overwrite);
      }
      return 0;
    }

    if (*engines) {
      EngineRegistry registry(std::filesystem::path(store_root) / "engines" / "engines.json");
      if (*e_list) {
        for (const auto& e : registry.list_engines()) {
          std::cout << e.name << '\t' << engine_kind_name(e.kind) << '\t' << e.model_id << '\n';
        }
      } else if (*e_add) {
        for (const auto& item : json_items(file)) registry.save_engine(json_io::engine_from_json(item));
      }
      return 0;
    }

    if (*serve) {
      service_config.store_root = store_root;
      if (!mock.empty()) {
        service_config.mock_override = std::make_shared<MockScript>(
            json_io::mock_from_json(json_io::parse(read_file(mock), mock)));
      }
      Service service(service_config);
      const int bound = service.bind(host, port);
      std::cerr << "listening on http://" << host << ':' << bound << '\n';
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.serve();
      g_service = nullptr;
      return 0;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
