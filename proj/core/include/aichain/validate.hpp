#pragma once

#include <set>
#include <string>
#include <vector>

#include "aichain/chain.hpp"
#include "aichain/error.hpp"

namespace aichain {

enum class Severity { warning, error };

struct Diagnostic {
  std::string unit_id;  // empty for program-level findings (variable table)
  Severity severity = Severity::error;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  bool valid() const noexcept;
  std::size_t error_count() const noexcept;
  std::string to_string() const;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

// Raised by operations that refuse invalid programs (session start, export).
class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

using NameSet = std::set<std::string, std::less<>>;

// Pure check of the program against the names available in its project.
ValidationReport validate(const ChainProgram& program, const NameSet& prompts,
                          const NameSet& engines);

// Tree equality up to unit ids, collapsed flags and preserved unknown fields.
bool structural_equal(const ChainProgram& a, const ChainProgram& b);

}  // namespace aichain
