#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aichain/chain.hpp"
#include "aichain/engine.hpp"
#include "aichain/prompt.hpp"

namespace aichain {

// Design-view assistants. Every call is one engine round-trip (two for a
// skeleton repair), so mock engines make them fully deterministic.
namespace copilot {

struct Turn {
  enum class Role { user, copilot };
  Role role;
  std::string text;
};

// Caller-owned chat history; roles alternate starting with the user.
struct Conversation {
  std::vector<Turn> turns;

  void check() const;
};

struct SkeletonStep {
  std::string name;
  std::string description;
  std::vector<std::string> candidate_prompts;  // exactly three
  std::size_t selected = 0;                    // candidate used when assembling
  std::vector<std::string> input_refs;
  std::optional<std::string> engine_ref;
};

struct Skeleton {
  std::string task_description;
  std::vector<SkeletonStep> steps;
};

// Raised when the engine output never becomes parseable JSON.
class SkeletonParseError : public Error {
 public:
  SkeletonParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Throws InvalidArgument naming the first violated invariant.
void check_skeleton(const Skeleton& s);

nlohmann::json to_json(const Skeleton& s);
Skeleton skeleton_from_json(const nlohmann::json& j);

std::string clarify(std::string_view task_description, const Conversation& conversation,
                    const EngineConfig& engine, const EngineGateway& gateway);

std::string incorporate(std::string_view task_description, std::string_view question,
                        std::string_view answer, const EngineConfig& engine,
                        const EngineGateway& gateway);

struct SkeletonDraft {
  Skeleton skeleton;
  int repair_rounds = 0;
};

// Asks for strict JSON; one repair round-trip if the first reply does not parse.
SkeletonDraft generate_skeleton(std::string_view task_description, const EngineConfig& engine,
                                const EngineGateway& gateway);

struct AssembledChain {
  ChainProgram program;
  std::vector<PromptTemplate> prompts;
};

// Sequential chain, one worker per step. Inputs naming an earlier step become
// variable references; any other input becomes a console input bound to a
// declared variable of the same name. The last worker goes to the Output
// window. Throws InvalidArgument on forward references.
AssembledChain skeleton_to_program(const Skeleton& skeleton,
                                   std::string_view default_engine = "default_engine");

// System prompt asset bodies, exposed for inspection and tests.
std::string_view asset(std::string_view name);

}  // namespace copilot
}  // namespace aichain
