#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "aichain/chain.hpp"
#include "aichain/engine.hpp"
#include "aichain/prompt.hpp"
#include "aichain/validate.hpp"

namespace aichain {

inline constexpr int kProjectFormatVersion = 1;

// A chain together with the project-local copies of the prompts and engines
// it references.
struct ProjectRecord {
  ChainProgram program;
  std::vector<PromptTemplate> prompts;
  std::vector<EngineConfig> engines;
  std::string created;   // ISO-8601 UTC, informational only
  std::string modified;
  std::string extra;     // unknown top-level fields, re-emitted on save

  const std::string& name() const noexcept { return program.name; }

  const PromptTemplate* find_prompt(std::string_view name) const;
  const EngineConfig* find_engine(std::string_view name) const;
  NameSet prompt_names() const;
  NameSet engine_names() const;

  ValidationReport validate() const;
};

class UnsupportedVersion : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Canonical project file bytes. Deterministic: keys sorted, two-space indent.
std::string save_project(const ProjectRecord& record);

// Throws UnsupportedVersion for a foreign schema version and InvalidArgument
// (with location) for malformed content.
ProjectRecord load_project(std::string_view bytes);

std::string utc_timestamp();

}  // namespace aichain
