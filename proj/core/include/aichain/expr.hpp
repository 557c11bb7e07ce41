#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aichain/value.hpp"

namespace aichain {

// Name -> value bindings visible to expressions and prompt rendering.
using Environment = std::map<std::string, Value, std::less<>>;

enum class BinaryOp { eq, ne, lt, le, gt, ge, add, contains, logical_and, logical_or };

std::string_view op_symbol(BinaryOp op) noexcept;
std::optional<BinaryOp> parse_op(std::string_view symbol) noexcept;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Condition / assignment mini-language. Trees are immutable once built and
// freely shared between program copies.
struct Expr {
  struct Literal {
    Value value;
  };
  struct Var {
    std::string name;
  };
  struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  struct Not {
    ExprPtr operand;
  };

  std::variant<Literal, Var, Binary, Not> node;
};

ExprPtr make_literal(Value v);
ExprPtr make_var(std::string name);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_not(ExprPtr operand);

// Parses the textual form, e.g. `count + 1 >= 3 and not (answer contains "no")`.
// Precedence from loosest: or, and, not, comparisons (non-associative), +.
// Throws InvalidArgument with the offending offset on malformed input.
ExprPtr parse_expr(std::string_view source);

// Fully parenthesised text that parse_expr accepts back.
std::string to_source(const Expr& e);

bool expr_equal(const Expr& a, const Expr& b);

// Variable names referenced by the expression, in first-occurrence order.
std::vector<std::string> referenced_vars(const Expr& e);

// Evaluates with dynamic typing:
//  - ordering comparisons need both operands to coerce to numbers;
//  - ==, != compare numerically when both coerce, else by text form;
//  - + adds when both coerce, else concatenates text forms;
//  - contains is a substring test on text forms;
//  - and/or short-circuit on truthiness and yield booleans.
// Throws EvalError for unbound names, non-numeric ordering operands, or a
// non-finite arithmetic result.
Value eval_expr(const Environment& env, const Expr& e);

}  // namespace aichain
