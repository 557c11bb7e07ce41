#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aichain/error.hpp"
#include "aichain/expr.hpp"

namespace aichain {

// Structured prompt. Only the instruction is mandatory; aspects are rendered
// in declaration order.
struct PromptTemplate {
  std::string name;
  std::optional<std::string> context;
  std::string instruction;
  std::optional<std::string> examples;
  std::optional<std::string> output_formatter;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

enum class Aspect { context, instruction, examples, output_formatter };

std::string_view aspect_name(Aspect a) noexcept;

class PlaceholderSyntaxError : public InvalidArgument {
 public:
  PlaceholderSyntaxError(Aspect aspect, std::size_t offset, const std::string& detail);

  Aspect aspect() const noexcept { return aspect_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Aspect aspect_;
  std::size_t offset_;
};

class UnresolvedPlaceholder : public Error {
 public:
  explicit UnresolvedPlaceholder(std::string identifier);

  const std::string& identifier() const noexcept { return identifier_; }

 private:
  std::string identifier_;
};

// Throws InvalidArgument if the instruction is empty or any aspect has a
// malformed placeholder.
void check_template(const PromptTemplate& t);

// Distinct placeholder names in first-occurrence order over context,
// instruction, examples, output_formatter.
std::vector<std::string> extract_placeholders(const PromptTemplate& t);

// Placeholders of a single free-standing body, scanned as an instruction.
std::vector<std::string> extract_placeholders(std::string_view body);

// Joins present aspects with a blank line and substitutes every {{Name}} with
// the text form of its binding. `{{{{` renders as a literal `{{`.
std::string render(const PromptTemplate& t, const Environment& bindings);

std::string render(std::string_view body, const Environment& bindings);

}  // namespace aichain
