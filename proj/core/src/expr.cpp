#include "aichain/expr.hpp"

#include <cmath>

#include "aichain/error.hpp"

namespace aichain {

std::string_view op_symbol(BinaryOp op) noexcept {
  switch (op) {
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::add: return "+";
    case BinaryOp::contains: return "contains";
    case BinaryOp::logical_and: return "and";
    case BinaryOp::logical_or: return "or";
  }
  return "?";
}

std::optional<BinaryOp> parse_op(std::string_view symbol) noexcept {
  static constexpr BinaryOp all[] = {BinaryOp::eq, BinaryOp::ne, BinaryOp::lt, BinaryOp::le,
                                     BinaryOp::gt, BinaryOp::ge, BinaryOp::add, BinaryOp::contains,
                                     BinaryOp::logical_and, BinaryOp::logical_or};
  for (BinaryOp op : all) {
    if (op_symbol(op) == symbol) return op;
  }
  return std::nullopt;
}

ExprPtr make_literal(Value v) {
  return std::make_shared<const Expr>(Expr{Expr::Literal{std::move(v)}});
}

ExprPtr make_var(std::string name) {
  if (!is_identifier(name)) {
    throw InvalidArgument("invalid identifier '" + name + "'");
  }
  return std::make_shared<const Expr>(Expr{Expr::Var{std::move(name)}});
}

ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  if (!lhs || !rhs) throw InvalidArgument("binary expression needs two operands");
  return std::make_shared<const Expr>(Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}});
}

ExprPtr make_not(ExprPtr operand) {
  if (!operand) throw InvalidArgument("not needs an operand");
  return std::make_shared<const Expr>(Expr{Expr::Not{std::move(operand)}});
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { number, string, ident, keyword, op, lparen, rparen, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

bool is_keyword(std::string_view w) {
  return w == "and" || w == "or" || w == "not" || w == "contains" || w == "true" || w == "false";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::end, "", pos_});
        return out;
      }
      const std::size_t start = pos_;
      const char c = src_[pos_];
      if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        out.push_back({Tok::number, lex_number(), start});
      } else if (c == '"') {
        out.push_back({Tok::string, lex_string(), start});
      } else if (is_alpha(c)) {
        std::string word;
        while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]))) {
          word.push_back(src_[pos_++]);
        }
        out.push_back({is_keyword(word) ? Tok::keyword : Tok::ident, word, start});
      } else if (c == '(') {
        ++pos_;
        out.push_back({Tok::lparen, "(", start});
      } else if (c == ')') {
        ++pos_;
        out.push_back({Tok::rparen, ")", start});
      } else {
        out.push_back({Tok::op, lex_operator(), start});
      }
    }
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

  void skip_space() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression syntax error at offset " + std::to_string(pos_) + ": " + what);
  }

  std::string lex_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        pos_ = p;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      }
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string lex_string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= src_.size()) break;
        const char esc = src_[pos_++];
        switch (esc) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unknown escape \\") + esc);
        }
      } else {
        out.push_back(c);
      }
    }
    fail("unterminated string literal");
  }

  std::string lex_operator() {
    static constexpr std::string_view two[] = {"==", "!=", "<=", ">="};
    for (auto op : two) {
      if (src_.substr(pos_, 2) == op) {
        pos_ += 2;
        return std::string(op);
      }
    }
    const char c = src_[pos_];
    if (c == '<' || c == '>' || c == '+' || c == '-') {
      ++pos_;
      return std::string(1, c);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr parse() {
    ExprPtr e = parse_or();
    if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  bool accept(Tok kind, std::string_view text) {
    if (peek().kind == kind && peek().text == text) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression syntax error at offset " + std::to_string(peek().offset) +
                          ": " + what);
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (accept(Tok::keyword, "or")) lhs = make_binary(BinaryOp::logical_or, lhs, parse_and());
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (accept(Tok::keyword, "and")) lhs = make_binary(BinaryOp::logical_and, lhs, parse_not());
    return lhs;
  }

  ExprPtr parse_not() {
    if (accept(Tok::keyword, "not")) return make_not(parse_not());
    return parse_cmp();
  }

  ExprPtr parse_cmp() {
    ExprPtr lhs = parse_add();
    const Token& t = peek();
    std::optional<BinaryOp> op;
    if (t.kind == Tok::op && t.text != "+" && t.text != "-") op = parse_op(t.text);
    if (t.kind == Tok::keyword && t.text == "contains") op = BinaryOp::contains;
    if (!op) return lhs;
    ++pos_;
    return make_binary(*op, lhs, parse_add());
  }

  ExprPtr parse_add() {
    ExprPtr lhs = parse_primary();
    while (accept(Tok::op, "+")) lhs = make_binary(BinaryOp::add, lhs, parse_primary());
    return lhs;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number:
        ++pos_;
        return make_literal(Value::number(checked_number(t.text)));
      case Tok::string:
        ++pos_;
        return make_literal(Value::text(t.text));
      case Tok::ident:
        ++pos_;
        return make_var(t.text);
      case Tok::keyword:
        if (t.text == "true" || t.text == "false") {
          ++pos_;
          return make_literal(Value::boolean(t.text == "true"));
        }
        break;
      case Tok::lparen: {
        ++pos_;
        ExprPtr inner = parse_or();
        if (!accept(Tok::rparen, ")")) fail("expected ')'");
        return inner;
      }
      case Tok::op:
        if (t.text == "-" && toks_[pos_ + 1].kind == Tok::number) {
          pos_ += 2;
          return make_literal(Value::number(-checked_number(toks_[pos_ - 1].text)));
        }
        break;
      default:
        break;
    }
    fail(t.kind == Tok::end ? "unexpected end of expression" : "unexpected '" + t.text + "'");
  }

  double checked_number(const std::string& text) const {
    auto d = parse_number(text);
    if (!d) fail("number literal '" + text + "' is out of range");
    return *d;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

ExprPtr parse_expr(std::string_view source) {
  return Parser(Lexer(source).run()).parse();
}

std::string to_source(const Expr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Literal>) {
          if (n.value.is_text() || n.value.is_image_ref()) return quote(n.value.as_string());
          return n.value.to_text();
        } else if constexpr (std::is_same_v<T, Expr::Var>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          return "(" + to_source(*n.lhs) + " " + std::string(op_symbol(n.op)) + " " +
                 to_source(*n.rhs) + ")";
        } else {
          return "(not " + to_source(*n.operand) + ")";
        }
      },
      e.node);
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto* la = std::get_if<Expr::Literal>(&a.node)) {
    return la->value == std::get<Expr::Literal>(b.node).value;
  }
  if (auto* va = std::get_if<Expr::Var>(&a.node)) {
    return va->name == std::get<Expr::Var>(b.node).name;
  }
  if (auto* ba = std::get_if<Expr::Binary>(&a.node)) {
    const auto& bb = std::get<Expr::Binary>(b.node);
    return ba->op == bb.op && expr_equal(*ba->lhs, *bb.lhs) && expr_equal(*ba->rhs, *bb.rhs);
  }
  return expr_equal(*std::get<Expr::Not>(a.node).operand, *std::get<Expr::Not>(b.node).operand);
}

namespace {

void collect_vars(const Expr& e, std::vector<std::string>& out) {
  if (auto* v = std::get_if<Expr::Var>(&e.node)) {
    for (const auto& seen : out) {
      if (seen == v->name) return;
    }
    out.push_back(v->name);
  } else if (auto* b = std::get_if<Expr::Binary>(&e.node)) {
    collect_vars(*b->lhs, out);
    collect_vars(*b->rhs, out);
  } else if (auto* n = std::get_if<Expr::Not>(&e.node)) {
    collect_vars(*n->operand, out);
  }
}

Value checked_sum(double a, double b) {
  const double sum = a + b;
  if (!std::isfinite(sum)) throw EvalError("arithmetic overflow: result is not finite");
  return Value::number(sum);
}

bool compare_ordering(BinaryOp op, const Value& lhs, const Value& rhs) {
  auto l = lhs.coerce_number();
  auto r = rhs.coerce_number();
  if (!l || !r) {
    throw EvalError("non-numeric operand to '" + std::string(op_symbol(op)) + "': '" +
                    (l ? rhs : lhs).to_text() + "'");
  }
  switch (op) {
    case BinaryOp::lt: return *l < *r;
    case BinaryOp::le: return *l <= *r;
    case BinaryOp::gt: return *l > *r;
    default: return *l >= *r;
  }
}

bool loosely_equal(const Value& lhs, const Value& rhs) {
  auto l = lhs.coerce_number();
  auto r = rhs.coerce_number();
  if (l && r) return *l == *r;
  return lhs.to_text() == rhs.to_text();
}

}  // namespace

std::vector<std::string> referenced_vars(const Expr& e) {
  std::vector<std::string> out;
  collect_vars(e, out);
  return out;
}

Value eval_expr(const Environment& env, const Expr& e) {
  if (auto* lit = std::get_if<Expr::Literal>(&e.node)) return lit->value;

  if (auto* var = std::get_if<Expr::Var>(&e.node)) {
    auto it = env.find(var->name);
    if (it == env.end()) throw EvalError("unbound variable '" + var->name + "'");
    return it->second;
  }

  if (auto* neg = std::get_if<Expr::Not>(&e.node)) {
    return Value::boolean(!eval_expr(env, *neg->operand).truthy());
  }

  const auto& bin = std::get<Expr::Binary>(e.node);
  if (bin.op == BinaryOp::logical_and) {
    if (!eval_expr(env, *bin.lhs).truthy()) return Value::boolean(false);
    return Value::boolean(eval_expr(env, *bin.rhs).truthy());
  }
  if (bin.op == BinaryOp::logical_or) {
    if (eval_expr(env, *bin.lhs).truthy()) return Value::boolean(true);
    return Value::boolean(eval_expr(env, *bin.rhs).truthy());
  }

  const Value lhs = eval_expr(env, *bin.lhs);
  const Value rhs = eval_expr(env, *bin.rhs);
  switch (bin.op) {
    case BinaryOp::eq:
      return Value::boolean(loosely_equal(lhs, rhs));
    case BinaryOp::ne:
      return Value::boolean(!loosely_equal(lhs, rhs));
    case BinaryOp::lt:
    case BinaryOp::le:
    case BinaryOp::gt:
    case BinaryOp::ge:
      return Value::boolean(compare_ordering(bin.op, lhs, rhs));
    case BinaryOp::add: {
      auto l = lhs.coerce_number();
      auto r = rhs.coerce_number();
      if (l && r) return checked_sum(*l, *r);
      return Value::text(lhs.to_text() + rhs.to_text());
    }
    case BinaryOp::contains:
      return Value::boolean(lhs.to_text().find(rhs.to_text()) != std::string::npos);
    default:
      break;
  }
  throw EvalError("unsupported operator");
}

}  // namespace aichain
