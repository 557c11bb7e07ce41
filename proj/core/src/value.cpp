#include "aichain/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <system_error>

#include "aichain/error.hpp"

namespace aichain {

Value Value::text(std::string s) {
  Value v;
  v.kind_ = Kind::text;
  v.str_ = std::move(s);
  return v;
}

Value Value::number(double d) {
  if (!std::isfinite(d)) {
    throw InvalidArgument("number value must be finite");
  }
  Value v;
  v.kind_ = Kind::number;
  v.num_ = d == 0.0 ? 0.0 : d;  // fold -0
  return v;
}

Value Value::boolean(bool b) {
  Value v;
  v.kind_ = Kind::boolean;
  v.flag_ = b;
  return v;
}

Value Value::image_ref(std::string ref) {
  if (ref.empty()) {
    throw InvalidArgument("image reference must be non-empty");
  }
  Value v;
  v.kind_ = Kind::image_ref;
  v.str_ = std::move(ref);
  return v;
}

const std::string& Value::as_string() const {
  if (kind_ != Kind::text && kind_ != Kind::image_ref) {
    throw InvalidArgument("value is not text");
  }
  return str_;
}

double Value::as_number() const {
  if (kind_ != Kind::number) {
    throw InvalidArgument("value is not a number");
  }
  return num_;
}

bool Value::as_boolean() const {
  if (kind_ != Kind::boolean) {
    throw InvalidArgument("value is not a boolean");
  }
  return flag_;
}

std::string Value::to_text() const {
  switch (kind_) {
    case Kind::number:
      return format_number(num_);
    case Kind::boolean:
      return flag_ ? "true" : "false";
    case Kind::text:
    case Kind::image_ref:
      break;
  }
  return str_;
}

std::optional<double> Value::coerce_number() const {
  switch (kind_) {
    case Kind::number:
      return num_;
    case Kind::text:
      return parse_number(str_);
    default:
      return std::nullopt;
  }
}

bool Value::truthy() const noexcept {
  switch (kind_) {
    case Kind::boolean:
      return flag_;
    case Kind::number:
      return num_ != 0.0;
    case Kind::text:
      return !str_.empty();
    case Kind::image_ref:
      return true;
  }
  return false;
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case Value::Kind::number:
      return a.num_ == b.num_;
    case Value::Kind::boolean:
      return a.flag_ == b.flag_;
    default:
      return a.str_ == b.str_;
  }
}

std::string_view kind_name(Value::Kind kind) noexcept {
  switch (kind) {
    case Value::Kind::text:
      return "text";
    case Value::Kind::number:
      return "number";
    case Value::Kind::boolean:
      return "boolean";
    case Value::Kind::image_ref:
      return "image_ref";
  }
  return "text";
}

std::optional<Value::Kind> parse_kind(std::string_view name) noexcept {
  if (name == "text") return Value::Kind::text;
  if (name == "number") return Value::Kind::number;
  if (name == "boolean") return Value::Kind::boolean;
  if (name == "image_ref") return Value::Kind::image_ref;
  return std::nullopt;
}

std::string format_number(double d) {
  if (d == 0.0) return "0";
  if (std::nearbyint(d) == d && std::fabs(d) < 1e16) {
    return std::to_string(static_cast<long long>(d));
  }

  // Shortest round-trip digits, then lay them out the way Python's repr does
  // so exported scripts print identical text.
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::scientific);
  std::string sci(buf, res.ptr);

  std::string sign;
  if (sci.front() == '-') {
    sign = "-";
    sci.erase(0, 1);
  }
  const auto e_pos = sci.find('e');
  std::string digits;
  for (char c : sci.substr(0, e_pos)) {
    if (c != '.') digits.push_back(c);
  }
  const int exponent = std::stoi(sci.substr(e_pos + 1));

  std::string out;
  if (exponent >= -4 && exponent < 16) {
    if (exponent >= 0) {
      const auto int_len = static_cast<std::size_t>(exponent) + 1;
      if (digits.size() <= int_len) {
        out = digits + std::string(int_len - digits.size(), '0') + ".0";
      } else {
        out = digits.substr(0, int_len) + "." + digits.substr(int_len);
      }
    } else {
      out = "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
    }
  } else {
    out = digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    out += exponent < 0 ? "e-" : "e+";
    const int mag = exponent < 0 ? -exponent : exponent;
    if (mag < 10) out += '0';
    out += std::to_string(mag);
  }
  return sign + out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::optional<double> parse_number(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  std::string_view s = text.substr(b, e - b);
  if (s.empty()) return std::nullopt;

  std::string_view body = s;
  if (body.front() == '+' || body.front() == '-') body.remove_prefix(1);

  // Validate the grammar by hand; from_chars alone would accept inf/nan/hex.
  std::size_t i = 0;
  std::size_t int_digits = 0;
  std::size_t frac_digits = 0;
  while (i < body.size() && is_digit(body[i])) ++i, ++int_digits;
  if (i < body.size() && body[i] == '.') {
    ++i;
    while (i < body.size() && is_digit(body[i])) ++i, ++frac_digits;
  }
  if (int_digits == 0 && frac_digits == 0) return std::nullopt;
  if (i < body.size() && (body[i] == 'e' || body[i] == 'E')) {
    ++i;
    if (i < body.size() && (body[i] == '+' || body[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < body.size() && is_digit(body[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != body.size()) return std::nullopt;

  // strtod rounds underflow to zero like other runtimes do; from_chars reports it as an error.
  const std::string copy(s);
  const double out = std::strtod(copy.c_str(), nullptr);
  if (!std::isfinite(out)) return std::nullopt;
  return out == 0.0 ? 0.0 : out;
}

bool is_identifier(std::string_view s) noexcept {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s.front())) return false;
  for (char c : s) {
    if (!alpha(c) && !is_digit(c)) return false;
  }
  return true;
}

}  // namespace aichain
