#include <gtest/gtest.h>

#include <set>

#include "aichain/interpreter.hpp"
#include "support.hpp"

using namespace aichain;
using testing_support::fixture_mock;
using testing_support::fixture_project;
using testing_support::fixture_text;
using testing_support::mock_gateway;

namespace {

std::shared_ptr<const ProjectRecord> shared(ProjectRecord r) {
  return std::make_shared<const ProjectRecord>(std::move(r));
}

std::size_t count(const std::vector<TranscriptEvent>& ev, EventKind k, int attempt = 0) {
  std::size_t n = 0;
  for (const auto& e : ev) {
    if (e.kind == k && (attempt == 0 || e.attempt == attempt)) ++n;
  }
  return n;
}

std::vector<std::string> started(const std::vector<TranscriptEvent>& ev) {
  std::vector<std::string> out;
  for (const auto& e : ev) {
    if (e.kind == EventKind::worker_started) out.push_back(e.unit_id);
  }
  return out;
}

// One-prompt, one-engine project skeleton for hand-built chains.
ProjectRecord scratch() {
  ProjectRecord r;
  r.program.name = "scratch";
  r.prompts.push_back({"Ask", std::nullopt, "Ask about {{Topic}}", std::nullopt, std::nullopt});
  r.prompts.push_back({"Plain", std::nullopt, "Plain request", std::nullopt, std::nullopt});
  EngineConfig e;
  e.name = "E";
  e.kind = EngineKind::chat;
  e.model_id = "m";
  r.engines.push_back(e);
  return r;
}

std::shared_ptr<EngineGateway> echo_gateway(std::vector<MockScript::Rule> rules = {}) {
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(std::move(rules), "reply"));
  return gw;
}

WorkerSpec worker(const std::string& name, const std::string& prompt, std::vector<Preworker> pre = {}) {
  WorkerSpec w = make_worker(name, prompt, "E", std::move(pre));
  w.id = "id-" + name;
  return w;
}

}  // namespace

TEST(Run, EmptyProgramFinishesImmediately) {
  ProjectRecord r = scratch();
  auto s = Session::start(shared(r), Mode::run, echo_gateway());
  EXPECT_EQ(s.status(), SessionStatus::finished);
  ASSERT_EQ(s.transcript().size(), 1u);
  EXPECT_EQ(s.transcript()[0].kind, EventKind::finished);
  EXPECT_EQ(s.transcript()[0].seq, 1u);
}

TEST(Run, MathQuizShapeAndGolden) {
  const auto events = run_to_completion(shared(fixture_project("math_quiz.json")), {"beginner"},
                                        mock_gateway("math_quiz_mock.json"));
  EXPECT_EQ(started(events), (std::vector<std::string>{"step-Math_Questions", "step-Answer_Options",
                                                       "step-Correct_Answer"}));
  EXPECT_EQ(count(events, EventKind::prompt_rendered), 3u);
  EXPECT_EQ(count(events, EventKind::engine_output), 3u);
  EXPECT_EQ(count(events, EventKind::output_window), 1u);
  EXPECT_EQ(events.back().kind, EventKind::finished);
  EXPECT_TRUE(testing_support::gapless(events));
  EXPECT_EQ(transcript_to_jsonl(events), fixture_text("math_quiz.golden.jsonl"));
}

TEST(Run, InteractivePathEqualsHeadless) {
  auto project = shared(fixture_project("math_quiz.json"));
  auto s = Session::start(project, Mode::run, mock_gateway("math_quiz_mock.json"));
  ASSERT_EQ(s.status(), SessionStatus::awaiting_input);
  EXPECT_EQ(s.pending_input_prompt(), "Difficulty_Level");
  s.feed_input("beginner");
  EXPECT_EQ(s.status(), SessionStatus::finished);
  EXPECT_EQ(s.env().at("Difficulty_Level"), Value::text("beginner"));
  EXPECT_EQ(s.transcript(), run_to_completion(project, {"beginner"}, mock_gateway("math_quiz_mock.json")));
}

TEST(Run, EventSinkSeesEveryEventInOrder) {
  std::vector<TranscriptEvent> seen;
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::run,
                          mock_gateway("math_quiz_mock.json"), {},
                          [&](const TranscriptEvent& e) { seen.push_back(e); });
  s.feed_input("beginner");
  EXPECT_EQ(seen, s.transcript());
}

TEST(Run, InputsExhaustedIsProtocolError) {
  EXPECT_THROW(run_to_completion(shared(fixture_project("math_quiz.json")), {},
                                 mock_gateway("math_quiz_mock.json")),
               ProtocolError);
}

TEST(Run, FeedWhenNotAwaitingIsProtocolError) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::run,
                          mock_gateway("math_quiz_mock.json"));
  s.feed_input("beginner");
  EXPECT_THROW(s.feed_input("again"), ProtocolError);
  EXPECT_THROW(s.debug(DebugCommand::step()), ProtocolError);
}

TEST(Run, InvalidProgramRefusedWithReport) {
  ProjectRecord r = scratch();
  r.program.top_level.push_back(unit(worker("A", "Missing")));
  try {
    Session::start(shared(r), Mode::run, echo_gateway());
    FAIL();
  } catch (const ValidationFailed& e) {
    EXPECT_FALSE(e.report().valid());
  }
}

TEST(Run, WhileLoopFixtureGolden) {
  const auto events = run_to_completion(shared(fixture_project("while_loop.json")), {},
                                        mock_gateway("while_loop_mock.json"));
  EXPECT_EQ(transcript_to_jsonl(events), fixture_text("while_loop.golden.jsonl"));
  EXPECT_EQ(output_window_text(events), "retry\naccepted\n");
}

TEST(Run, ForLoopAsksForInputEachIteration) {
  ProjectRecord r = scratch();
  r.program.variables.push_back({"Topic", Value::text("")});
  Unit loop = for_stmt("i", parse_expr("1"), parse_expr("2"),
                       {unit(worker("A", "Ask", {console_input("topic?", "Topic")}))});
  std::get<ForStmt>(loop.node).id = "loop";
  r.program.top_level.push_back(loop);
  auto s = Session::start(shared(r), Mode::run, echo_gateway());
  ASSERT_EQ(s.status(), SessionStatus::awaiting_input);
  s.feed_input("cats");
  ASSERT_EQ(s.status(), SessionStatus::awaiting_input);
  s.feed_input("dogs");
  EXPECT_EQ(s.status(), SessionStatus::finished);
  EXPECT_EQ(count(s.transcript(), EventKind::needs_input), 2u);
  std::vector<std::string> prompts;
  for (const auto& e : s.transcript()) {
    if (e.kind == EventKind::prompt_rendered) prompts.push_back(e.payload);
  }
  EXPECT_EQ(prompts, (std::vector<std::string>{"Ask about cats", "Ask about dogs"}));
  EXPECT_EQ(s.env().at("i"), Value::number(2));
}

TEST(Run, EmptyForRangeSkipsBody) {
  ProjectRecord r = scratch();
  Unit loop = for_stmt("i", parse_expr("3"), parse_expr("1"), {unit(worker("A", "Plain"))});
  std::get<ForStmt>(loop.node).id = "loop";
  r.program.top_level.push_back(loop);
  EXPECT_TRUE(started(run_to_completion(shared(r), {}, echo_gateway())).empty());
}

TEST(Run, LoopCapFailsSession) {
  ProjectRecord r = scratch();
  Unit loop = while_stmt(parse_expr("true"), {console_output(parse_expr("\"tick\""))});
  std::get<WhileStmt>(loop.node).id = "spin";
  r.program.top_level.push_back(loop);
  auto s = Session::start(shared(r), Mode::run, echo_gateway(), {5});
  EXPECT_EQ(s.status(), SessionStatus::failed);
  EXPECT_EQ(count(s.transcript(), EventKind::console_output), 5u);
  EXPECT_EQ(s.transcript().back().kind, EventKind::error);
  EXPECT_EQ(s.transcript().back().unit_id, "spin");
}

TEST(Run, StatementsBranchesAndConsole) {
  ProjectRecord r = scratch();
  r.program.variables.push_back({"n", Value::number(1)});
  Unit bump = assign("n", parse_expr("n + 1"));
  std::get<AssignStmt>(bump.node).id = "bump";
  Unit yes = console_output(parse_expr("\"big \" + n"));
  std::get<ConsoleOutputStmt>(yes.node).id = "yes";
  Unit no = console_output(parse_expr("\"small\""));
  std::get<ConsoleOutputStmt>(no.node).id = "no";
  Unit branch = if_stmt(parse_expr("n >= 2"), {yes}, {no});
  std::get<IfStmt>(branch.node).id = "branch";
  r.program.top_level = {bump, branch};
  const auto events = run_to_completion(shared(r), {}, echo_gateway());
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].kind, EventKind::console_output);
  EXPECT_EQ(events[0].payload, "big 2");
  EXPECT_EQ(events[0].unit_id, "yes");
}

TEST(Run, StatementErrorFailsSession) {
  ProjectRecord r = scratch();
  r.program.variables.push_back({"s", Value::text("abc")});
  Unit bad = console_output(parse_expr("s < 3"));
  std::get<ConsoleOutputStmt>(bad.node).id = "bad";
  r.program.top_level = {bad};
  auto s = Session::start(shared(r), Mode::debug, echo_gateway());
  EXPECT_EQ(s.status(), SessionStatus::failed);
  EXPECT_EQ(s.transcript().back().kind, EventKind::error);
}

TEST(Run, UnmatchedInputsAreAppended) {
  ProjectRecord r = scratch();
  r.program.variables.push_back({"Topic", Value::text("space")});
  r.program.variables.push_back({"Extra", Value::number(4)});
  r.program.top_level = {unit(worker("A", "Ask", {variable_ref("Topic"), variable_ref("Extra")}))};
  const auto events = run_to_completion(shared(r), {}, echo_gateway());
  EXPECT_EQ(events[1].kind, EventKind::prompt_rendered);
  EXPECT_EQ(events[1].payload, "Ask about space\nExtra: 4");
}

TEST(Run, PreworkersAndPreunitsRunFirst) {
  ProjectRecord r = scratch();
  WorkerSpec inner = worker("Inner", "Plain");
  WorkerSpec outer = worker("Outer", "Plain", {nested_worker(inner)});
  Unit box = container("Box", {unit(worker("Pre", "Plain"))}, {unit(outer), unit(worker("Last", "Plain"))});
  std::get<ContainerSpec>(box.node).id = "box";
  r.program.top_level = {box};
  const auto events = run_to_completion(shared(r), {}, echo_gateway());
  EXPECT_EQ(started(events),
            (std::vector<std::string>{"id-Pre", "id-Inner", "id-Outer", "id-Last"}));
  // Nested preworker output feeds the parent and is visible globally.
  bool saw = false;
  for (const auto& e : events) {
    if (e.kind == EventKind::prompt_rendered && e.unit_id == "id-Outer") {
      EXPECT_EQ(e.payload, "Plain request\nInner: reply");
      saw = true;
    }
  }
  EXPECT_TRUE(saw);
}

TEST(Run, DisabledBlocksAreSkipped) {
  ProjectRecord r = scratch();
  WorkerSpec off = worker("Off", "Plain");
  off.meta.enabled = false;
  Unit wrapped = output(worker("Shown", "Plain"));
  std::get<OutputStmt>(wrapped.node).id = "out";
  std::get<OutputStmt>(wrapped.node).worker.meta.enabled = false;
  r.program.top_level = {unit(off), wrapped, unit(worker("On", "Plain"))};
  const auto events = run_to_completion(shared(r), {}, echo_gateway());
  EXPECT_EQ(started(events), std::vector<std::string>{"id-On"});
  EXPECT_EQ(count(events, EventKind::output_window), 0u);
}

TEST(Run, EngineErrorFailsRunMode) {
  ProjectRecord r = scratch();
  r.engines[0].kind = EngineKind::mock;
  r.engines[0].mock_script_ref = "not-registered";
  r.program.top_level = {unit(worker("A", "Plain")), unit(worker("B", "Plain"))};
  auto s = Session::start(shared(r), Mode::run, std::make_shared<EngineGateway>());
  EXPECT_EQ(s.status(), SessionStatus::failed);
  EXPECT_EQ(started(s.transcript()), std::vector<std::string>{"id-A"});
  EXPECT_EQ(count(s.transcript(), EventKind::error), 1u);
}

TEST(Run, ImageOutputsFlowDownstreamAsText) {
  ProjectRecord r = scratch();
  EngineConfig img;
  img.name = "Img";
  img.kind = EngineKind::image;
  img.model_id = "dall-e";
  r.engines.push_back(img);
  WorkerSpec pic = worker("Pic", "Plain");
  pic.engine_ref = "Img";
  r.program.top_level = {unit(pic), unit(worker("Caption", "Plain", {variable_ref("Pic")}))};
  auto s = Session::start(shared(r), Mode::run, echo_gateway());
  EXPECT_EQ(s.env().at("Pic"), Value::image_ref("reply"));
  EXPECT_EQ(s.transcript()[4].payload, "Plain request\nPic: reply");
}

TEST(Debug, SuspendsAfterFirstWorker) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug,
                          mock_gateway("math_quiz_mock.json"));
  s.feed_input("beginner");
  EXPECT_EQ(s.status(), SessionStatus::suspended);
  EXPECT_EQ(count(s.transcript(), EventKind::worker_started), 1u);
  EXPECT_EQ(s.current_worker_id(), "step-Math_Questions");
  EXPECT_EQ(s.transcript().back().kind, EventKind::suspended);
}

TEST(Debug, StepThroughThreeWorkers) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug,
                          mock_gateway("math_quiz_mock.json"));
  s.feed_input("beginner");
  s.debug(DebugCommand::step());
  s.debug(DebugCommand::step());
  EXPECT_EQ(s.status(), SessionStatus::suspended);
  s.debug(DebugCommand::step());
  EXPECT_EQ(s.status(), SessionStatus::finished);
  EXPECT_EQ(count(s.transcript(), EventKind::suspended), 3u);
  EXPECT_THROW(s.debug(DebugCommand::step()), ProtocolError);
  EXPECT_THROW(s.debug(DebugCommand::abort()), ProtocolError);
}

TEST(Debug, StepWhileAwaitingInputIsProtocolError) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug,
                          mock_gateway("math_quiz_mock.json"));
  EXPECT_THROW(s.debug(DebugCommand::step()), ProtocolError);
  EXPECT_THROW(s.debug(DebugCommand::rerun()), ProtocolError);
}

TEST(Debug, ContinueRunsToCompletion) {
  auto project = shared(fixture_project("math_quiz.json"));
  auto s = Session::start(project, Mode::debug, mock_gateway("math_quiz_mock.json"));
  s.feed_input("beginner");
  s.debug(DebugCommand::resume());
  EXPECT_EQ(s.status(), SessionStatus::finished);
  EXPECT_EQ(count(s.transcript(), EventKind::suspended), 1u);
  const auto run = run_to_completion(project, {"beginner"}, mock_gateway("math_quiz_mock.json"));
  EXPECT_TRUE(testing_support::same_events(
      testing_support::without_kind(s.transcript(), EventKind::suspended), run));
}

TEST(Debug, EditAndRerunMiddleWorker) {
  auto mock = fixture_mock("math_quiz_mock.json");
  std::vector<MockScript::Rule> rules = mock->rules();
  rules.insert(rules.begin(), {"Give five options", "Q1: A) 1 B) 2 C) 3 D) 4 E) 12"});
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(rules, "UNMATCHED"));

  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug, gw);
  s.feed_input("beginner");
  s.debug(DebugCommand::step());
  ASSERT_EQ(s.current_worker_id(), "step-Answer_Options");
  const auto before = s.transcript().size();
  s.debug(DebugCommand::edit_prompt("step-Answer_Options", "Give five options for:\n{{Math_Questions}}"));
  EXPECT_EQ(s.transcript().size(), before);  // editing executes nothing
  s.debug(DebugCommand::rerun());
  EXPECT_EQ(s.status(), SessionStatus::suspended);
  EXPECT_EQ(s.env().at("Answer_Options"), Value::text("Q1: A) 1 B) 2 C) 3 D) 4 E) 12"));
  s.debug(DebugCommand::resume());
  ASSERT_EQ(s.status(), SessionStatus::finished);

  for (const auto& e : s.transcript()) {
    if (e.attempt == 2) {
      EXPECT_EQ(e.unit_id, "step-Answer_Options") << event_to_json_line(e);
    }
  }
  EXPECT_EQ(count(s.transcript(), EventKind::rerun_marker), 1u);
  EXPECT_EQ(count(s.transcript(), EventKind::prompt_rendered, 2), 1u);
  EXPECT_EQ(count(s.transcript(), EventKind::engine_output, 2), 1u);
  for (const auto& e : s.transcript()) {
    if (e.kind == EventKind::prompt_rendered && e.unit_id == "step-Correct_Answer") {
      EXPECT_NE(e.payload.find("E) 12"), std::string::npos);
    }
  }
  EXPECT_TRUE(testing_support::gapless(s.transcript()));
}

TEST(Debug, EditUnknownWorkerIsRejected) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug,
                          mock_gateway("math_quiz_mock.json"));
  s.feed_input("beginner");
  EXPECT_THROW(s.debug(DebugCommand::edit_prompt("nope", "x")), Error);
}

TEST(Debug, WorkerErrorSuspendsAndCanBeRepaired) {
  ProjectRecord r = scratch();
  r.program.top_level = {unit(worker("A", "Ask")), unit(worker("B", "Plain"))};
  auto s = Session::start(shared(r), Mode::debug, echo_gateway());
  // {{Topic}} is unbound: the render fails, the session waits for a fix.
  EXPECT_EQ(s.status(), SessionStatus::suspended);
  EXPECT_EQ(count(s.transcript(), EventKind::error), 1u);
  s.debug(DebugCommand::edit_prompt("id-A", "No placeholder now"));
  s.debug(DebugCommand::rerun());
  EXPECT_EQ(s.env().at("A"), Value::text("reply"));
  s.debug(DebugCommand::resume());
  EXPECT_EQ(s.status(), SessionStatus::finished);
}

TEST(Debug, StepAfterUnrepairedErrorFails) {
  ProjectRecord r = scratch();
  r.program.top_level = {unit(worker("A", "Ask"))};
  auto s = Session::start(shared(r), Mode::debug, echo_gateway());
  s.debug(DebugCommand::step());
  EXPECT_EQ(s.status(), SessionStatus::failed);
}

TEST(Debug, AbortEmitsErrorAndFails) {
  auto s = Session::start(shared(fixture_project("math_quiz.json")), Mode::debug,
                          mock_gateway("math_quiz_mock.json"));
  s.debug(DebugCommand::abort());  // allowed while awaiting input
  EXPECT_EQ(s.status(), SessionStatus::failed);
  EXPECT_EQ(s.transcript().back().kind, EventKind::error);
  EXPECT_EQ(s.transcript().back().payload, "aborted by user");
}

TEST(Debug, StepOnlyEqualsRunOnRandomPrograms) {
  testing_support::Rng rng(77);
  for (int i = 0; i < 150; ++i) {
    auto g = testing_support::random_runnable_project(rng, {true, 4, 12});
    auto project = shared(g.record);
    auto gw = std::make_shared<EngineGateway>();
    gw->set_override(g.mock);
    const auto run = run_to_completion(project, g.inputs, gw);
    auto s = Session::start(project, Mode::debug, gw);
    std::size_t next_input = 0;
    while (s.status() != SessionStatus::finished && s.status() != SessionStatus::failed) {
      if (s.status() == SessionStatus::awaiting_input) {
        s.feed_input(g.inputs.at(next_input++));
      } else {
        s.debug(DebugCommand::step());
      }
    }
    ASSERT_TRUE(testing_support::same_events(
        testing_support::without_kind(s.transcript(), EventKind::suspended), run));
  }
}

TEST(Transcript, JsonlRoundTripAndKeyOrder) {
  const auto events = run_to_completion(shared(fixture_project("math_quiz.json")), {"beginner"},
                                        mock_gateway("math_quiz_mock.json"));
  const std::string text = transcript_to_jsonl(events);
  EXPECT_EQ(transcript_from_jsonl(text), events);
  EXPECT_EQ(event_to_json_line(events[0]).rfind("{\"kind\":\"needs_input\",\"unit_id\"", 0), 0u);
  EXPECT_THROW(transcript_from_jsonl("{\"kind\":\"bogus\"}\n"), InvalidArgument);
}

TEST(Transcript, OutputWindowOnlyFromWrappers) {
  testing_support::Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    auto g = testing_support::random_runnable_project(rng, {true, 4, 12});
    std::set<std::string> wrapped;
    for_each_worker(g.record.program.top_level, [&](const WorkerSpec& w, bool out) {
      if (out) wrapped.insert(w.id);
    });
    auto out = testing_support::run_outcome(g.record, g.mock, g.inputs);
    for (const auto& e : out.events) {
      if (e.kind == EventKind::output_window) {
        ASSERT_TRUE(wrapped.count(e.unit_id)) << e.unit_id;
      }
    }
    ASSERT_TRUE(testing_support::gapless(out.events));
  }
}

TEST(Session, NamesRoundTrip) {
  EXPECT_EQ(parse_mode(mode_name(Mode::debug)), Mode::debug);
  EXPECT_EQ(parse_event_kind(event_kind_name(EventKind::rerun_marker)), EventKind::rerun_marker);
  EXPECT_EQ(status_name(SessionStatus::awaiting_input), "awaiting_input");
}
