#include "aichain/interpreter.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "aichain/prompt.hpp"

namespace aichain {

std::string_view mode_name(Mode m) noexcept { return m == Mode::run ? "run" : "debug"; }

std::optional<Mode> parse_mode(std::string_view s) noexcept {
  if (s == "run") return Mode::run;
  if (s == "debug") return Mode::debug;
  return std::nullopt;
}

std::string_view status_name(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::running: return "running";
    case SessionStatus::suspended: return "suspended";
    case SessionStatus::awaiting_input: return "awaiting_input";
    case SessionStatus::finished: return "finished";
    case SessionStatus::failed: return "failed";
  }
  return "failed";
}

namespace {

constexpr std::string_view kEventNames[] = {
    "worker_started", "prompt_rendered", "engine_output", "console_output",
    "output_window",  "needs_input",     "input_received", "suspended",
    "rerun_marker",   "error",           "finished",
};

}  // namespace

std::string_view event_kind_name(EventKind k) noexcept {
  return kEventNames[static_cast<std::size_t>(k)];
}

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept {
  for (std::size_t i = 0; i < std::size(kEventNames); ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

using Inputs = std::vector<std::pair<std::string, Value>>;

struct Frame {
  enum class Kind { sequence, worker, while_loop, for_loop };

  Kind kind = Kind::sequence;
  std::string unit_id;

  // sequence
  const std::vector<Unit>* units = nullptr;
  std::size_t next = 0;

  // worker
  const WorkerSpec* worker = nullptr;
  bool to_output = false;
  std::size_t next_pre = 0;
  Inputs inputs;
  const WorkerSpec* pending_child = nullptr;

  // loops
  const WhileStmt* loop = nullptr;
  const ForStmt* range = nullptr;
  long long current = 0;
  long long last = 0;
  std::size_t iterations = 0;
};

// The worker that last ran to the end of an attempt; the target of rerun.
struct LastWorker {
  const WorkerSpec* worker = nullptr;
  bool to_output = false;
  Inputs inputs;
  int attempt = 1;
  bool failed = false;
};

// Statement-level failure; ends the session in either mode.
struct Abort {
  std::string unit_id;
  std::string message;
};

}  // namespace

struct Session::Impl {
  std::shared_ptr<const ProjectRecord> project;
  std::shared_ptr<const EngineGateway> gateway;
  SessionOptions options;
  EventSink sink;

  Mode mode = Mode::run;
  SessionStatus status = SessionStatus::running;
  Environment env;
  std::vector<TranscriptEvent> transcript;
  std::vector<Frame> stack;
  const ConsoleInput* pending_input = nullptr;
  std::optional<LastWorker> last;
  std::map<std::string, std::string, std::less<>> prompt_edits;  // worker id -> edited body

  void emit(EventKind kind, std::string unit_id, std::string payload, int attempt = 1) {
    TranscriptEvent e{kind, std::move(unit_id), std::move(payload), attempt,
                      static_cast<std::uint64_t>(transcript.size() + 1)};
    transcript.push_back(e);
    if (sink) sink(transcript.back());
  }

  void fail(const std::string& unit_id, const std::string& message) {
    emit(EventKind::error, unit_id, message);
    status = SessionStatus::failed;
    stack.clear();
  }

  // -- driving ---------------------------------------------------------------

  void advance() {
    status = SessionStatus::running;
    try {
      while (status == SessionStatus::running) {
        if (stack.empty()) {
          emit(EventKind::finished, "", "");
          status = SessionStatus::finished;
          break;
        }
        step_frame();
      }
    } catch (const Abort& a) {
      fail(a.unit_id, a.message);
    }
  }

  void step_frame() {
    Frame& f = stack.back();
    switch (f.kind) {
      case Frame::Kind::sequence:
        if (f.next >= f.units->size()) {
          stack.pop_back();
        } else {
          const Unit& u = (*f.units)[f.next++];
          enter(u);
        }
        break;
      case Frame::Kind::worker:
        step_worker();
        break;
      case Frame::Kind::while_loop:
        step_while();
        break;
      case Frame::Kind::for_loop:
        step_for();
        break;
    }
  }

  void push_sequence(const std::vector<Unit>& units, std::string id) {
    Frame f;
    f.kind = Frame::Kind::sequence;
    f.unit_id = std::move(id);
    f.units = &units;
    stack.push_back(std::move(f));
  }

  void push_worker(const WorkerSpec& w, bool to_output) {
    Frame f;
    f.kind = Frame::Kind::worker;
    f.unit_id = w.id;
    f.worker = &w;
    f.to_output = to_output;
    stack.push_back(std::move(f));
  }

  Value eval(const std::string& unit_id, const ExprPtr& e) {
    try {
      return eval_expr(env, *e);
    } catch (const Error& err) {
      throw Abort{unit_id, err.what()};
    }
  }

  void enter(const Unit& u) {
    if (!unit_meta(u).enabled) return;
    std::visit(
        [this](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, WorkerSpec>) {
            push_worker(n, false);
          } else if constexpr (std::is_same_v<T, OutputStmt>) {
            if (n.worker.meta.enabled) push_worker(n.worker, true);
          } else if constexpr (std::is_same_v<T, ContainerSpec>) {
            push_sequence(n.units, n.id);
            push_sequence(n.preunits, n.id);
          } else if constexpr (std::is_same_v<T, ConsoleOutputStmt>) {
            emit(EventKind::console_output, n.id, eval(n.id, n.expr).to_text());
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            env.insert_or_assign(n.var, eval(n.id, n.expr));
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            push_sequence(eval(n.id, n.cond).truthy() ? n.then_units : n.else_units, n.id);
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            Frame f;
            f.kind = Frame::Kind::while_loop;
            f.unit_id = n.id;
            f.loop = &n;
            stack.push_back(std::move(f));
          } else if constexpr (std::is_same_v<T, ForStmt>) {
            Frame f;
            f.kind = Frame::Kind::for_loop;
            f.unit_id = n.id;
            f.range = &n;
            f.current = bound(n.id, n.from, "start");
            f.last = bound(n.id, n.to, "end");
            stack.push_back(std::move(f));
          }
        },
        u.node);
  }

  long long bound(const std::string& id, const ExprPtr& e, const char* which) {
    const Value v = eval(id, e);
    auto d = v.coerce_number();
    if (!d || std::nearbyint(*d) != *d || std::fabs(*d) > 9.0e15) {
      throw Abort{id, std::string("for-loop range ") + which + " '" + v.to_text() +
                          "' is not an integer"};
    }
    return static_cast<long long>(*d);
  }

  void step_while() {
    Frame& f = stack.back();
    if (!eval(f.unit_id, f.loop->cond).truthy()) {
      stack.pop_back();
      return;
    }
    if (f.iterations >= options.max_loop_iterations) {
      throw Abort{f.unit_id, "while loop exceeded " + std::to_string(options.max_loop_iterations) +
                                 " iterations"};
    }
    ++f.iterations;
    const WhileStmt* loop = f.loop;
    push_sequence(loop->body, loop->id);
  }

  void step_for() {
    Frame& f = stack.back();
    if (f.current > f.last) {
      stack.pop_back();
      return;
    }
    if (f.iterations >= options.max_loop_iterations) {
      throw Abort{f.unit_id, "for loop exceeded " + std::to_string(options.max_loop_iterations) +
                                 " iterations"};
    }
    ++f.iterations;
    env.insert_or_assign(f.range->var, Value::number(static_cast<double>(f.current)));
    ++f.current;
    const ForStmt* range = f.range;
    push_sequence(range->body, range->id);
  }

  void step_worker() {
    Frame& f = stack.back();
    if (f.pending_child != nullptr) {
      const WorkerSpec* child = f.pending_child;
      f.pending_child = nullptr;
      auto it = env.find(child->name);
      if (it == env.end()) throw Abort{f.unit_id, "preworker '" + child->name + "' produced no output"};
      f.inputs.emplace_back(child->name, it->second);
    }

    if (f.next_pre < f.worker->preworkers.size()) {
      const Preworker& pre = f.worker->preworkers[f.next_pre++];
      if (auto* in = std::get_if<ConsoleInput>(&pre.source)) {
        pending_input = in;
        status = SessionStatus::awaiting_input;
        emit(EventKind::needs_input, f.unit_id, in->prompt_text);
      } else if (auto* ref = std::get_if<VariableRef>(&pre.source)) {
        auto it = env.find(ref->name);
        if (it == env.end()) {
          throw Abort{f.unit_id, "input '" + ref->name + "' is not bound"};
        }
        f.inputs.emplace_back(ref->name, it->second);
      } else {
        const auto& child = std::get<WorkerSpec>(pre.source);
        if (child.meta.enabled) {
          f.pending_child = &child;
          push_worker(child, false);  // invalidates f
        }
      }
      return;
    }

    LastWorker run;
    run.worker = f.worker;
    run.to_output = f.to_output;
    run.inputs = std::move(f.inputs);
    stack.pop_back();

    emit(EventKind::worker_started, run.worker->id, run.worker->name);
    attempt(run);
    last = std::move(run);
    if (last->failed) {
      if (mode == Mode::run) {
        status = SessionStatus::failed;
        stack.clear();
        return;
      }
    }
    if (mode == Mode::debug) {
      status = SessionStatus::suspended;
      emit(EventKind::suspended, last->worker->id, last->worker->name, last->attempt);
    }
  }

  // Renders, invokes and binds one attempt of `run`. Failures are recorded as
  // an error event and `run.failed`.
  void attempt(LastWorker& run) {
    const WorkerSpec& w = *run.worker;
    run.failed = false;
    std::string prompt;
    try {
      prompt = render_prompt(w, run.inputs);
    } catch (const Error& e) {
      run.failed = true;
      emit(EventKind::error, w.id, e.what(), run.attempt);
      return;
    }
    emit(EventKind::prompt_rendered, w.id, prompt, run.attempt);

    const EngineConfig* engine = project->find_engine(w.engine_ref);
    try {
      if (engine == nullptr) throw NotFound("unknown engine '" + w.engine_ref + "'");
      EngineResponse resp = gateway->invoke(*engine, prompt);
      const std::string text = resp.value.to_text();
      emit(EventKind::engine_output, w.id, text, run.attempt);
      if (run.to_output) emit(EventKind::output_window, w.id, text, run.attempt);
      env.insert_or_assign(w.name, std::move(resp.value));
    } catch (const Error& e) {
      run.failed = true;
      emit(EventKind::error, w.id, e.what(), run.attempt);
    }
  }

  std::string render_prompt(const WorkerSpec& w, const Inputs& inputs) const {
    Environment bindings = env;
    for (const auto& [name, value] : inputs) bindings.insert_or_assign(name, value);

    std::string text;
    std::vector<std::string> used;
    if (auto edit = prompt_edits.find(w.id); edit != prompt_edits.end()) {
      text = render(edit->second, bindings);
      used = extract_placeholders(edit->second);
    } else {
      const PromptTemplate* tpl = project->find_prompt(w.prompt_ref);
      if (tpl == nullptr) throw NotFound("unknown prompt '" + w.prompt_ref + "'");
      text = render(*tpl, bindings);
      used = extract_placeholders(*tpl);
    }
    // Inputs without a matching placeholder trail the prompt, one per line.
    for (const auto& [name, value] : inputs) {
      if (std::find(used.begin(), used.end(), name) == used.end()) {
        text += "\n" + name + ": " + value.to_text();
      }
    }
    return text;
  }

  // -- commands --------------------------------------------------------------

  void require(SessionStatus expected, std::string_view what) const {
    if (status != expected) {
      throw ProtocolError(std::string(what) + " requires status " +
                          std::string(status_name(expected)) + ", session is " +
                          std::string(status_name(status)));
    }
  }

  void feed(std::string text) {
    require(SessionStatus::awaiting_input, "input");
    const ConsoleInput* in = pending_input;
    pending_input = nullptr;
    Frame& f = stack.back();
    emit(EventKind::input_received, f.unit_id, text);
    Value v = Value::text(std::move(text));
    env.insert_or_assign(in->var, v);
    f.inputs.emplace_back(in->var, std::move(v));
    advance();
  }

  void proceed() {
    if (last && last->failed) {
      fail(last->worker->id, "worker '" + last->worker->name +
                                 "' failed; edit its prompt and rerun, or abort");
      return;
    }
    advance();
  }

  bool has_worker(std::string_view id) const {
    bool found = false;
    for_each_worker(project->program.top_level, [&](const WorkerSpec& w, bool) {
      if (w.id == id) found = true;
    });
    return found;
  }

  void command(const DebugCommand& cmd) {
    if (cmd.kind == DebugCommand::Kind::abort) {
      if (status == SessionStatus::finished || status == SessionStatus::failed) {
        throw ProtocolError("abort: session already " + std::string(status_name(status)));
      }
      pending_input = nullptr;
      fail("", "aborted by user");
      return;
    }
    if (mode != Mode::debug) throw ProtocolError("debug commands need a debug-mode session");
    switch (cmd.kind) {
      case DebugCommand::Kind::step:
        require(SessionStatus::suspended, "step");
        proceed();
        break;
      case DebugCommand::Kind::resume:
        require(SessionStatus::suspended, "continue");
        mode = Mode::run;
        proceed();
        break;
      case DebugCommand::Kind::edit_prompt:
        require(SessionStatus::suspended, "edit_prompt");
        if (!has_worker(cmd.worker_id)) throw NotFound("unknown worker id '" + cmd.worker_id + "'");
        if (cmd.text.empty()) throw InvalidArgument("edited prompt is empty");
        extract_placeholders(cmd.text);  // syntax check
        prompt_edits.insert_or_assign(cmd.worker_id, cmd.text);
        break;
      case DebugCommand::Kind::rerun:
        require(SessionStatus::suspended, "rerun");
        if (!last) throw ProtocolError("rerun: no worker has run yet");
        ++last->attempt;
        emit(EventKind::rerun_marker, last->worker->id, last->worker->name, last->attempt);
        attempt(*last);
        break;
      case DebugCommand::Kind::abort:
        break;
    }
  }
};

// ---------------------------------------------------------------------------

Session::Session(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;
Session::~Session() = default;

Session Session::start(std::shared_ptr<const ProjectRecord> project, Mode mode,
                       std::shared_ptr<const EngineGateway> gateway, SessionOptions options,
                       EventSink sink) {
  if (!project) throw InvalidArgument("session needs a project");
  if (!gateway) throw InvalidArgument("session needs an engine gateway");
  ValidationReport report = project->validate();
  if (!report.valid()) throw ValidationFailed(std::move(report));

  auto impl = std::make_unique<Impl>();
  impl->project = std::move(project);
  impl->gateway = std::move(gateway);
  impl->options = options;
  impl->sink = std::move(sink);
  impl->mode = mode;
  for (const auto& v : impl->project->program.variables) {
    impl->env.insert_or_assign(v.name, v.initial);
  }
  impl->push_sequence(impl->project->program.top_level, "");
  impl->advance();
  return Session(std::move(impl));
}

void Session::feed_input(std::string text) { impl_->feed(std::move(text)); }
void Session::debug(const DebugCommand& cmd) { impl_->command(cmd); }
SessionStatus Session::status() const noexcept { return impl_->status; }
Mode Session::mode() const noexcept { return impl_->mode; }
const std::vector<TranscriptEvent>& Session::transcript() const noexcept {
  return impl_->transcript;
}
const Environment& Session::env() const noexcept { return impl_->env; }
const ProjectRecord& Session::project() const noexcept { return *impl_->project; }

std::vector<std::string> Session::cursor() const {
  std::vector<std::string> out;
  for (const auto& f : impl_->stack) {
    if (!f.unit_id.empty() && (out.empty() || out.back() != f.unit_id)) out.push_back(f.unit_id);
  }
  return out;
}

std::optional<std::string> Session::pending_input_prompt() const {
  if (impl_->pending_input == nullptr) return std::nullopt;
  return impl_->pending_input->prompt_text;
}

std::optional<std::string> Session::current_worker_id() const {
  if (impl_->status != SessionStatus::suspended || !impl_->last) return std::nullopt;
  return impl_->last->worker->id;
}

std::vector<TranscriptEvent> run_to_completion(std::shared_ptr<const ProjectRecord> project,
                                               const std::vector<std::string>& inputs,
                                               std::shared_ptr<const EngineGateway> gateway,
                                               SessionOptions options) {
  Session s = Session::start(std::move(project), Mode::run, std::move(gateway), options);
  std::size_t next = 0;
  while (s.status() == SessionStatus::awaiting_input) {
    if (next >= inputs.size()) {
      throw ProtocolError("scripted inputs exhausted while the chain awaits input '" +
                          s.pending_input_prompt().value_or("") + "'");
    }
    s.feed_input(inputs[next++]);
  }
  return s.transcript();
}

// ---------------------------------------------------------------------------

std::string event_to_json_line(const TranscriptEvent& e) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(event_kind_name(e.kind));
  j["unit_id"] = e.unit_id;
  j["payload"] = e.payload;
  j["attempt"] = e.attempt;
  j["seq"] = e.seq;
  return j.dump();
}

std::string transcript_to_jsonl(const std::vector<TranscriptEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += event_to_json_line(e);
    out += '\n';
  }
  return out;
}

std::vector<TranscriptEvent> transcript_from_jsonl(std::string_view text) {
  std::vector<TranscriptEvent> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto kind = parse_event_kind(j.at("kind").get<std::string>());
      if (!kind) throw InvalidArgument("unknown event kind");
      out.push_back({*kind, j.at("unit_id").get<std::string>(), j.at("payload").get<std::string>(),
                     j.at("attempt").get<int>(), j.at("seq").get<std::uint64_t>()});
    } catch (const std::exception& e) {
      throw InvalidArgument("transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string output_window_text(const std::vector<TranscriptEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    if (e.kind == EventKind::output_window) {
      out += e.payload;
      out += '\n';
    }
  }
  return out;
}

}  // namespace aichain
