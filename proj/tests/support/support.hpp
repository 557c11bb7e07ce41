#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aichain/engine.hpp"
#include "aichain/interpreter.hpp"
#include "aichain/project.hpp"

namespace testing_support {

using json = nlohmann::json;
using Rng = std::mt19937_64;

std::filesystem::path fixture_path(const std::string& name);
std::string fixture_text(const std::string& name);
aichain::ProjectRecord fixture_project(const std::string& name);
std::shared_ptr<aichain::MockScript> fixture_mock(const std::string& name);
std::shared_ptr<aichain::EngineGateway> mock_gateway(const std::string& fixture);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Generators

struct ProgramShape {
  bool control_flow = false;  // if / for blocks
  int max_depth = 4;
  int max_units = 12;
};

// A valid runnable project plus the mock script that answers its workers.
struct GeneratedProject {
  aichain::ProjectRecord record;
  std::shared_ptr<aichain::MockScript> mock;
  std::vector<std::string> inputs;  // enough console input for any path
};

GeneratedProject random_runnable_project(Rng& rng, const ProgramShape& shape = {});

// Arbitrary well-formed (not necessarily valid) project exercising every unit
// kind, optional aspects, engine knobs and preserved unknown fields.
aichain::ProjectRecord random_any_project(Rng& rng);

aichain::ExprPtr random_expr(Rng& rng, int depth, const std::vector<std::string>& vars);
aichain::Environment random_env(Rng& rng, const std::vector<std::string>& vars);

struct GeneratedTemplate {
  aichain::PromptTemplate prompt;
  std::map<std::string, std::string> bindings;  // name -> text form
  aichain::Environment env;
};
GeneratedTemplate random_template(Rng& rng);

std::string random_word(Rng& rng, std::size_t min_len = 1, std::size_t max_len = 8);

// ---------------------------------------------------------------------------
// Independent oracles. They read only the JSON forms and share no code with
// the library.

// Worker ids in execution order for a control-flow-free chain.
std::vector<std::string> oracle_worker_order(const json& project);

// Outcome of evaluating a JSON expression: {"type", "text"} or {"error"}.
json oracle_eval(const json& expr, const json& env);

// Longest-name-first "{{name}}" substitution over the joined aspects.
std::string oracle_render(const aichain::PromptTemplate& t,
                          const std::map<std::string, std::string>& bindings);

std::string oracle_format_number(double d);

// ---------------------------------------------------------------------------
// Transcript helpers

std::vector<aichain::TranscriptEvent> without_kind(const std::vector<aichain::TranscriptEvent>& in,
                                                   aichain::EventKind kind);
// Same sequence ignoring seq values.
bool same_events(const std::vector<aichain::TranscriptEvent>& a,
                 const std::vector<aichain::TranscriptEvent>& b);
bool gapless(const std::vector<aichain::TranscriptEvent>& events);

// Runs headless, returning either the transcript or the validation report text.
struct RunOutcome {
  std::vector<aichain::TranscriptEvent> events;
  std::optional<std::string> validation_error;
  friend bool operator==(const RunOutcome&, const RunOutcome&) = default;
};
RunOutcome run_outcome(const aichain::ProjectRecord& record,
                       const std::shared_ptr<aichain::MockScript>& mock,
                       const std::vector<std::string>& inputs);

// Runs a command, capturing stdout. Returns the exit status.
int run_command(const std::string& command, std::string* out);

}  // namespace testing_support
