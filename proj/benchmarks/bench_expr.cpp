#include <benchmark/benchmark.h>

#include "aichain/expr.hpp"

using namespace aichain;

static void BM_ParseExpr(benchmark::State& state) {
  const std::string src = "not (score >= 3 and label contains \"ok\") or attempts + 1 < limit";
  for (auto _ : state) benchmark::DoNotOptimize(parse_expr(src));
}
BENCHMARK(BM_ParseExpr);

static void BM_EvalExpr(benchmark::State& state) {
  const auto e = parse_expr("not (score >= 3 and label contains \"ok\") or attempts + 1 < limit");
  const Environment env{{"score", Value::text("2.5")},
                        {"label", Value::text("not ok yet")},
                        {"attempts", Value::number(4)},
                        {"limit", Value::number(5)}};
  for (auto _ : state) benchmark::DoNotOptimize(eval_expr(env, *e));
}
BENCHMARK(BM_EvalExpr);

static void BM_FormatNumber(benchmark::State& state) {
  double d = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(format_number(d));
    d += 0.37;
  }
}
BENCHMARK(BM_FormatNumber);
