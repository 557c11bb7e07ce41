#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aichain/engine.hpp"
#include "aichain/project.hpp"

namespace aichain {

enum class Mode { run, debug };
enum class SessionStatus { running, suspended, awaiting_input, finished, failed };

enum class EventKind {
  worker_started,
  prompt_rendered,
  engine_output,
  console_output,
  output_window,
  needs_input,
  input_received,
  suspended,
  rerun_marker,
  error,
  finished,
};

std::string_view mode_name(Mode m) noexcept;
std::optional<Mode> parse_mode(std::string_view s) noexcept;
std::string_view status_name(SessionStatus s) noexcept;
std::string_view event_kind_name(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;

struct TranscriptEvent {
  EventKind kind;
  std::string unit_id;
  std::string payload;
  int attempt = 1;
  std::uint64_t seq = 0;  // 1-based, gapless within a session

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

struct DebugCommand {
  enum class Kind { step, resume, edit_prompt, rerun, abort };

  Kind kind = Kind::step;
  std::string worker_id;  // edit_prompt only
  std::string text;       // edit_prompt only

  static DebugCommand step() { return {Kind::step, {}, {}}; }
  static DebugCommand resume() { return {Kind::resume, {}, {}}; }
  static DebugCommand edit_prompt(std::string worker_id, std::string text) {
    return {Kind::edit_prompt, std::move(worker_id), std::move(text)};
  }
  static DebugCommand rerun() { return {Kind::rerun, {}, {}}; }
  static DebugCommand abort() { return {Kind::abort, {}, {}}; }
};

struct SessionOptions {
  std::size_t max_loop_iterations = 10000;
};

// Live run or debug execution of one project.
//
// Execution is driven synchronously by start(), feed_input() and debug(); a
// call returns once the session needs input, suspends (debug mode) or ends.
// A Session is not internally synchronised: callers serialise commands, but
// may hand a session between threads.
class Session {
 public:
  using EventSink = std::function<void(const TranscriptEvent&)>;

  static Session start(std::shared_ptr<const ProjectRecord> project, Mode mode,
                       std::shared_ptr<const EngineGateway> gateway, SessionOptions options = {},
                       EventSink sink = {});

  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  ~Session();

  // Requires status awaiting_input.
  void feed_input(std::string text);

  // Step/resume/edit_prompt/rerun require status suspended; abort is accepted
  // in any non-terminal state.
  void debug(const DebugCommand& cmd);

  SessionStatus status() const noexcept;
  Mode mode() const noexcept;
  const std::vector<TranscriptEvent>& transcript() const noexcept;
  const Environment& env() const noexcept;
  const ProjectRecord& project() const noexcept;

  // Ids of the units on the execution stack, outermost first.
  std::vector<std::string> cursor() const;

  // Prompt text of the console input being waited on.
  std::optional<std::string> pending_input_prompt() const;

  // Id of the most recently executed worker while suspended.
  std::optional<std::string> current_worker_id() const;

 private:
  struct Impl;
  explicit Session(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Headless run: consumes `inputs` in order whenever the chain asks for one.
// Throws ProtocolError when input is needed and none are left.
std::vector<TranscriptEvent> run_to_completion(std::shared_ptr<const ProjectRecord> project,
                                               const std::vector<std::string>& inputs,
                                               std::shared_ptr<const EngineGateway> gateway,
                                               SessionOptions options = {});

// One JSON object per line with keys kind, unit_id, payload, attempt, seq.
std::string event_to_json_line(const TranscriptEvent& e);
std::string transcript_to_jsonl(const std::vector<TranscriptEvent>& events);
std::vector<TranscriptEvent> transcript_from_jsonl(std::string_view text);

// Output window projection: each output_window payload followed by a newline.
std::string output_window_text(const std::vector<TranscriptEvent>& events);

}  // namespace aichain
