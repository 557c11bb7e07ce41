#include <benchmark/benchmark.h>

#include "aichain/prompt.hpp"

using namespace aichain;

namespace {

PromptTemplate structured(int placeholders) {
  PromptTemplate t;
  t.name = "bench";
  t.context = "You are a careful assistant for {{Audience}}.";
  for (int i = 0; i < placeholders; ++i) {
    t.instruction += "Consider {{Field" + std::to_string(i) + "}} and explain it. ";
  }
  t.examples = "Example: {{{{literal}} braces stay.";
  t.output_formatter = "Answer as a bulleted list.";
  return t;
}

Environment bindings(int placeholders) {
  Environment env{{"Audience", Value::text("students")}};
  for (int i = 0; i < placeholders; ++i) {
    env.insert_or_assign("Field" + std::to_string(i), Value::text(std::string(64, 'x')));
  }
  return env;
}

}  // namespace

static void BM_Render(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = structured(n);
  const auto env = bindings(n);
  for (auto _ : state) benchmark::DoNotOptimize(render(t, env));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Render)->Arg(1)->Arg(5)->Arg(50);

static void BM_ExtractPlaceholders(benchmark::State& state) {
  const auto t = structured(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_placeholders(t));
}
BENCHMARK(BM_ExtractPlaceholders)->Arg(5)->Arg(50);
