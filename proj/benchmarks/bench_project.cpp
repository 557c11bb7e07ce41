#include <benchmark/benchmark.h>

#include "aichain/artifact_store.hpp"
#include "aichain/code_export.hpp"
#include "aichain/project.hpp"

using namespace aichain;

namespace {

const std::string& quiz_bytes() {
  static const std::string bytes = read_file(std::string(AICHAIN_FIXTURE_DIR) + "/math_quiz.json");
  return bytes;
}

}  // namespace

static void BM_LoadProject(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(load_project(quiz_bytes()));
}
BENCHMARK(BM_LoadProject);

static void BM_SaveProject(benchmark::State& state) {
  const auto record = load_project(quiz_bytes());
  for (auto _ : state) benchmark::DoNotOptimize(save_project(record));
}
BENCHMARK(BM_SaveProject);

static void BM_Validate(benchmark::State& state) {
  const auto record = load_project(quiz_bytes());
  for (auto _ : state) benchmark::DoNotOptimize(record.validate());
}
BENCHMARK(BM_Validate);

static void BM_ExportCode(benchmark::State& state) {
  const auto record = load_project(quiz_bytes());
  for (auto _ : state) benchmark::DoNotOptimize(export_code(record));
}
BENCHMARK(BM_ExportCode);
