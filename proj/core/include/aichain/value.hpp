#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aichain {

// Runtime value flowing between workers, variables and expressions.
//
// Each value carries exactly one tag. Numbers are always finite and image
// references are never empty; the factories enforce both.
class Value {
 public:
  enum class Kind { text, number, boolean, image_ref };

  Value() = default;  // empty text

  static Value text(std::string s);
  static Value number(double d);
  static Value boolean(bool b);
  static Value image_ref(std::string ref);

  Kind kind() const noexcept { return kind_; }
  bool is_text() const noexcept { return kind_ == Kind::text; }
  bool is_number() const noexcept { return kind_ == Kind::number; }
  bool is_boolean() const noexcept { return kind_ == Kind::boolean; }
  bool is_image_ref() const noexcept { return kind_ == Kind::image_ref; }

  // Raw payload accessors; throw InvalidArgument on a tag mismatch.
  const std::string& as_string() const;
  double as_number() const;
  bool as_boolean() const;

  // Canonical text form: numbers without trailing zeros, booleans as
  // true/false, image refs as their payload.
  std::string to_text() const;

  // Numbers coerce to themselves; text coerces when it parses as a finite
  // decimal number. Booleans and image refs never coerce.
  std::optional<double> coerce_number() const;

  bool truthy() const noexcept;

  friend bool operator==(const Value& a, const Value& b);

 private:
  Kind kind_ = Kind::text;
  std::string str_;
  double num_ = 0.0;
  bool flag_ = false;
};

std::string_view kind_name(Value::Kind kind) noexcept;
std::optional<Value::Kind> parse_kind(std::string_view name) noexcept;

// Shortest round-trip decimal rendering. Integral values below 1e16 print as
// plain integers; everything else uses fixed notation for exponents in
// [-4, 16) and d.ddde+XX otherwise.
std::string format_number(double d);

// Strict decimal parse: optional surrounding ASCII whitespace, optional sign,
// digits with an optional fraction and exponent. Rejects non-finite results.
std::optional<double> parse_number(std::string_view text);

bool is_identifier(std::string_view s) noexcept;

}  // namespace aichain
