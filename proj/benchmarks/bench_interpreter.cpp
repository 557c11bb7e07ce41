#include <benchmark/benchmark.h>

#include "aichain/artifact_store.hpp"
#include "aichain/interpreter.hpp"
#include "aichain/serialization.hpp"

using namespace aichain;

namespace {

std::string fixture(const std::string& name) { return read_file(std::string(AICHAIN_FIXTURE_DIR) + "/" + name); }

std::shared_ptr<EngineGateway> gateway(const std::string& mock) {
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(json_io::mock_from_json(json_io::parse(fixture(mock), mock))));
  return gw;
}

// A long chain: `n` workers each feeding the next.
std::shared_ptr<const ProjectRecord> linear_chain(int n) {
  ProjectRecord r;
  r.program.name = "linear";
  r.program.variables.push_back({"Seed", Value::text("start")});
  std::string prev = "Seed";
  for (int i = 0; i < n; ++i) {
    const std::string name = "W" + std::to_string(i);
    r.prompts.push_back({name + "_p", std::nullopt, "Continue from {{" + prev + "}}", std::nullopt, std::nullopt});
    WorkerSpec w = make_worker(name, name + "_p", "E", {variable_ref(prev)});
    w.id = "id-" + name;
    r.program.top_level.push_back(unit(std::move(w)));
    prev = name;
  }
  EngineConfig e;
  e.name = "E";
  e.kind = EngineKind::chat;
  e.model_id = "m";
  r.engines.push_back(e);
  return std::make_shared<const ProjectRecord>(std::move(r));
}

}  // namespace

static void BM_RunMathQuiz(benchmark::State& state) {
  auto project = std::make_shared<const ProjectRecord>(load_project(fixture("math_quiz.json")));
  auto gw = gateway("math_quiz_mock.json");
  for (auto _ : state) benchmark::DoNotOptimize(run_to_completion(project, {"beginner"}, gw));
}
BENCHMARK(BM_RunMathQuiz);

static void BM_RunLinearChain(benchmark::State& state) {
  auto project = linear_chain(static_cast<int>(state.range(0)));
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(std::vector<MockScript::Rule>{}, "ok"));
  for (auto _ : state) benchmark::DoNotOptimize(run_to_completion(project, {}, gw));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunLinearChain)->Arg(10)->Arg(100);

static void BM_DebugStepLinearChain(benchmark::State& state) {
  auto project = linear_chain(static_cast<int>(state.range(0)));
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(std::vector<MockScript::Rule>{}, "ok"));
  for (auto _ : state) {
    auto s = Session::start(project, Mode::debug, gw);
    while (s.status() == SessionStatus::suspended) s.debug(DebugCommand::step());
    benchmark::DoNotOptimize(s.transcript().size());
  }
}
BENCHMARK(BM_DebugStepLinearChain)->Arg(10)->Arg(100);
