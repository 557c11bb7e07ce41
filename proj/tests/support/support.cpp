#include "support.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "aichain/serialization.hpp"

#ifndef AICHAIN_FIXTURE_DIR
#error "AICHAIN_FIXTURE_DIR must be defined"
#endif

namespace testing_support {

using namespace aichain;

std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(AICHAIN_FIXTURE_DIR) / name;
}

std::string fixture_text(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ProjectRecord fixture_project(const std::string& name) { return load_project(fixture_text(name)); }

std::shared_ptr<MockScript> fixture_mock(const std::string& name) {
  return std::make_shared<MockScript>(
      json_io::mock_from_json(json_io::parse(fixture_text(name), name)));
}

std::shared_ptr<EngineGateway> mock_gateway(const std::string& fixture) {
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(fixture_mock(fixture));
  return gw;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("aichain-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

template <typename T>
const T& choose(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(items.size()) - 1))];
}

const std::string kEngine = "default_engine";

EngineConfig chat_engine() {
  EngineConfig e;
  e.name = kEngine;
  e.kind = EngineKind::chat;
  e.model_id = "gpt-3.5-turbo";
  return e;
}

struct RunnableGen {
  Rng& rng;
  ProgramShape shape;
  int budget;
  int workers = 0;
  int loops = 0;
  int ids = 0;
  std::vector<std::string> bound{"Topic", "n", "Flag"};
  std::vector<PromptTemplate> prompts;
  std::vector<MockScript::Rule> rules;

  WorkerSpec worker(int depth) {
    const std::string name = "W" + std::to_string(++workers);
    std::vector<Preworker> pre;
    const int n_pre = pick(rng, 0, 2);
    for (int i = 0; i < n_pre; ++i) {
      const int kind = pick(rng, 0, 9);
      if (kind < 2) {
        pre.push_back(console_input("Enter a topic", coin(rng, 0.5) ? "Topic" : "Flag"));
      } else if (kind < 4 && depth < shape.max_depth && budget > 0) {
        --budget;
        WorkerSpec nested = worker(depth + 1);
        bound.push_back(nested.name);
        pre.push_back(nested_worker(std::move(nested)));
      } else {
        std::string ref = choose(rng, bound);
        if (ref == "n") ref = "Topic";
        pre.push_back(variable_ref(ref));
      }
    }
    PromptTemplate p;
    p.name = name + "_prompt";
    p.instruction = coin(rng, 0.5) ? "Step " + name + " about {{Topic}}." : "Step " + name + " now.";
    if (coin(rng, 0.3)) p.context = "You are worker " + name + ".";
    prompts.push_back(p);
    rules.push_back({"Step " + name + " ", name + " says " + random_word(rng)});
    WorkerSpec w = make_worker(name, p.name, kEngine, std::move(pre));
    w.id = "id-" + name;
    return w;
  }

  ExprPtr logged_expr() {
    std::string name = choose(rng, bound);
    return make_binary(BinaryOp::add, make_literal(Value::text("log ")), make_var(name));
  }

  Unit make(int depth) {
    --budget;
    const int roll = pick(rng, 0, shape.control_flow ? 11 : 8);
    const bool can_nest = depth < shape.max_depth;
    if (roll <= 2 || (!can_nest && roll >= 6)) return plain_worker(depth);
    if (roll == 3) {
      WorkerSpec w = worker(depth + 1);
      const std::string name = w.name;
      Unit u = output(std::move(w));
      std::get<OutputStmt>(u.node).id = "out-" + name;
      bound.push_back(name);
      return u;
    }
    if (roll == 4) {
      Unit u = console_output(logged_expr());
      std::get<ConsoleOutputStmt>(u.node).id = "log-" + std::to_string(++ids);
      return u;
    }
    if (roll == 5) {
      Unit u = coin(rng, 0.5)
                   ? assign("n", make_binary(BinaryOp::add, make_var("n"),
                                             make_literal(Value::number(1))))
                   : assign("Flag", make_binary(BinaryOp::add, make_var("Topic"),
                                                make_literal(Value::text("!"))));
      std::get<AssignStmt>(u.node).id = "set-" + std::to_string(++ids);
      return u;
    }
    if (roll <= 8 && budget >= 2) {
      std::vector<Unit> preunits;
      if (coin(rng, 0.4) && budget >= 3) preunits.push_back(make(depth + 1));
      std::vector<Unit> units;
      units.push_back(make(depth + 1));
      units.push_back(make(depth + 1));
      while (budget > 0 && coin(rng, 0.3)) units.push_back(make(depth + 1));
      Unit u = container("C" + std::to_string(workers), std::move(preunits), std::move(units));
      std::get<ContainerSpec>(u.node).id = "c-" + std::to_string(++ids);
      return u;
    }
    if (roll == 9 || roll == 10) {
      ExprPtr cond = coin(rng, 0.5)
                         ? make_binary(BinaryOp::gt, make_var("n"),
                                       make_literal(Value::number(pick(rng, 0, 2))))
                         : make_binary(BinaryOp::contains, make_var("Topic"),
                                       make_literal(Value::text(std::string(1, "aeiou"[pick(rng, 0, 4)]))));
      const auto saved = bound;
      std::vector<Unit> then_units{make(depth + 1)};
      bound = saved;
      std::vector<Unit> else_units;
      if (coin(rng, 0.5) && budget > 0) else_units.push_back(make(depth + 1));
      bound = saved;
      Unit u = if_stmt(cond, std::move(then_units), std::move(else_units));
      std::get<IfStmt>(u.node).id = "if-" + std::to_string(++ids);
      return u;
    }
    if (roll == 11) {
      const std::string var = "k" + std::to_string(++loops);
      const auto saved = bound;
      bound.push_back(var);
      std::vector<Unit> body{make(depth + 1)};
      bound = saved;
      Unit u = for_stmt(var, make_literal(Value::number(1)),
                        make_literal(Value::number(pick(rng, 0, 2))), std::move(body));
      std::get<ForStmt>(u.node).id = "for-" + var;
      return u;
    }
    return plain_worker(depth);
  }

  Unit plain_worker(int depth) {
    WorkerSpec w = worker(depth);
    bound.push_back(w.name);
    return unit(std::move(w));
  }
};

}  // namespace

GeneratedProject random_runnable_project(Rng& rng, const ProgramShape& shape) {
  RunnableGen g{rng, shape, pick(rng, 1, shape.max_units)};
  GeneratedProject out;
  ProjectRecord& r = out.record;
  r.program.name = "generated";
  r.program.variables = {{"Topic", Value::text(random_word(rng))},
                         {"n", Value::number(0)},
                         {"Flag", Value::text("")}};
  while (g.budget > 0) r.program.top_level.push_back(g.make(1));
  r.prompts = g.prompts;
  r.engines = {chat_engine()};
  out.mock = std::make_shared<MockScript>(g.rules, "fallback");
  for (int i = 0; i < 64; ++i) out.inputs.push_back(random_word(rng));
  return out;
}

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  const auto len = static_cast<std::size_t>(pick(rng, static_cast<int>(min_len), static_cast<int>(max_len)));
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += letters[static_cast<std::size_t>(pick(rng, 0, 25))];
  return s;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kTexts = {"", "abc", "3", " 4.5 ", "1e2", "0x10", "-7", "+.5",
                                         "true", "a3b", "12abc", "nan", "inf", "1.", "ab"};

Value random_value(Rng& rng) {
  switch (pick(rng, 0, 5)) {
    case 0:
      return Value::number(pick(rng, -5, 5));
    case 1:
      return Value::number(pick(rng, -200, 200) / 8.0);
    case 2:
      return Value::boolean(coin(rng, 0.5));
    case 3:
      return Value::text(random_word(rng, 0, 3));
    default:
      return Value::text(choose(rng, kTexts));
  }
}

}  // namespace

ExprPtr random_expr(Rng& rng, int depth, const std::vector<std::string>& vars) {
  if (depth <= 1 || coin(rng, 0.25)) {
    if (!vars.empty() && coin(rng, 0.4)) {
      // Occasionally reference an unbound name to exercise the error path.
      return make_var(coin(rng, 0.05) ? "missing" : choose(rng, vars));
    }
    return make_literal(random_value(rng));
  }
  if (coin(rng, 0.1)) return make_not(random_expr(rng, depth - 1, vars));
  static const std::vector<BinaryOp> ops = {
      BinaryOp::eq,  BinaryOp::ne,  BinaryOp::lt,       BinaryOp::le,          BinaryOp::gt,
      BinaryOp::ge,  BinaryOp::add, BinaryOp::contains, BinaryOp::logical_and, BinaryOp::logical_or};
  return make_binary(choose(rng, ops), random_expr(rng, depth - 1, vars),
                     random_expr(rng, depth - 1, vars));
}

Environment random_env(Rng& rng, const std::vector<std::string>& vars) {
  Environment env;
  for (const auto& v : vars) env.insert_or_assign(v, random_value(rng));
  return env;
}

GeneratedTemplate random_template(Rng& rng) {
  GeneratedTemplate out;
  const int n_names = pick(rng, 0, 5);
  std::vector<std::string> names;
  for (int i = 0; i < n_names; ++i) {
    std::string name;
    if (!names.empty() && coin(rng, 0.4)) {
      name = choose(rng, names) + "_" + random_word(rng, 1, 3);  // shares a prefix
    } else {
      name = std::string(1, "ABCDEFGHIJ"[pick(rng, 0, 9)]) + random_word(rng, 0, 6);
    }
    if (std::find(names.begin(), names.end(), name) != names.end()) continue;
    names.push_back(name);
    Value v;
    switch (pick(rng, 0, 3)) {
      case 0:
        v = Value::number(pick(rng, -1000, 1000) / 4.0);
        break;
      case 1:
        v = Value::boolean(coin(rng, 0.5));
        break;
      default: {
        std::string s = random_word(rng, 0, 10);
        if (coin(rng, 0.3)) s += " }} " + random_word(rng);
        v = Value::text(s);
      }
    }
    if (v.is_number()) {
      out.bindings[name] = oracle_format_number(v.as_number());
    } else if (v.is_boolean()) {
      out.bindings[name] = v.as_boolean() ? "true" : "false";
    } else {
      out.bindings[name] = v.as_string();
    }
    out.env.insert_or_assign(name, v);
  }

  auto body = [&]() {
    std::string s;
    const int pieces = pick(rng, 1, 6);
    static const std::vector<std::string> fillers = {" ", "\n", ": ", ". ", "}", "}}", "{ ", "-"};
    for (int i = 0; i < pieces; ++i) {
      if (!names.empty() && coin(rng, 0.5)) {
        s += "{{" + choose(rng, names) + "}}";
      } else {
        s += random_word(rng, 0, 6);
      }
      s += choose(rng, fillers);
    }
    return s;
  };
  out.prompt.name = "T";
  out.prompt.instruction = body();
  if (out.prompt.instruction.empty()) out.prompt.instruction = "x";
  if (coin(rng, 0.5)) out.prompt.context = body();
  if (coin(rng, 0.3)) out.prompt.examples = coin(rng, 0.2) ? std::string() : body();
  if (coin(rng, 0.3)) out.prompt.output_formatter = body();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ExprPtr any_expr(Rng& rng) { return random_expr(rng, pick(rng, 1, 4), {"a", "b", "Topic"}); }

BlockMeta any_meta(Rng& rng) {
  BlockMeta m;
  m.enabled = coin(rng, 0.85);
  m.collapsed = coin(rng, 0.2);
  if (coin(rng, 0.3)) m.comment = random_word(rng) + " " + random_word(rng);
  return m;
}

std::string any_extra(Rng& rng) {
  if (!coin(rng, 0.2)) return {};
  json j;
  j["x_" + random_word(rng, 1, 4)] = pick(rng, 0, 500);
  if (coin(rng, 0.5)) j["ui"] = {{"color", random_word(rng)}, {"pos", {pick(rng, 0, 9), 3}}};
  return j.dump();
}

struct AnyGen {
  Rng& rng;
  int budget;
  int ids = 0;

  std::string id() { return "u" + std::to_string(++ids); }

  WorkerSpec worker(int depth) {
    std::vector<Preworker> pre;
    const int n = pick(rng, 0, 3);
    for (int i = 0; i < n; ++i) {
      const int k = pick(rng, 0, 2);
      if (k == 0) {
        pre.push_back(console_input(random_word(rng) + "?", "a"));
      } else if (k == 1 || depth > 3) {
        pre.push_back(variable_ref(coin(rng, 0.5) ? "Topic" : "b"));
      } else {
        pre.push_back(nested_worker(worker(depth + 1)));
      }
    }
    WorkerSpec w = make_worker("S" + std::to_string(ids + 1), "P" + std::to_string(pick(rng, 0, 2)),
                               "E" + std::to_string(pick(rng, 0, 1)), std::move(pre));
    w.id = id();
    w.meta = any_meta(rng);
    w.extra = any_extra(rng);
    return w;
  }

  std::vector<Unit> seq(int depth, int max_len) {
    std::vector<Unit> out;
    const int n = pick(rng, 0, max_len);
    for (int i = 0; i < n && budget > 0; ++i) out.push_back(make(depth));
    return out;
  }

  Unit make(int depth) {
    --budget;
    const int roll = depth > 4 ? pick(rng, 0, 3) : pick(rng, 0, 7);
    Unit u;
    switch (roll) {
      case 0:
        u = unit(worker(depth));
        break;
      case 1: {
        OutputStmt s;
        s.id = id();
        s.worker = worker(depth);
        u = unit(std::move(s));
        break;
      }
      case 2:
        u = console_output(any_expr(rng));
        std::get<ConsoleOutputStmt>(u.node).id = id();
        break;
      case 3:
        u = assign(coin(rng, 0.5) ? "a" : "b", any_expr(rng));
        std::get<AssignStmt>(u.node).id = id();
        break;
      case 4: {
        ContainerSpec c;
        c.id = id();
        c.name = coin(rng, 0.5) ? "Group" + std::to_string(ids) : "";
        c.preunits = seq(depth + 1, 2);
        c.units = seq(depth + 1, 3);
        u = unit(std::move(c));
        break;
      }
      case 5:
        u = if_stmt(any_expr(rng), seq(depth + 1, 2), seq(depth + 1, 2));
        std::get<IfStmt>(u.node).id = id();
        break;
      case 6:
        u = while_stmt(any_expr(rng), seq(depth + 1, 2));
        std::get<WhileStmt>(u.node).id = id();
        break;
      default:
        u = for_stmt("i" + std::to_string(ids), any_expr(rng), any_expr(rng), seq(depth + 1, 2));
        std::get<ForStmt>(u.node).id = id();
        break;
    }
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (!std::is_same_v<T, WorkerSpec>) {
            n.meta = any_meta(rng);
            n.extra = any_extra(rng);
          }
        },
        u.node);
    return u;
  }
};

}  // namespace

ProjectRecord random_any_project(Rng& rng) {
  AnyGen g{rng, pick(rng, 0, 20)};
  ProjectRecord r;
  r.program.name = "proj_" + random_word(rng);
  r.program.variables = {{"a", random_value(rng)}, {"b", Value::image_ref("img://" + random_word(rng))}};
  if (coin(rng, 0.5)) r.program.variables.push_back({"Topic", Value::text(random_word(rng, 0, 5))});
  while (g.budget > 0) r.program.top_level.push_back(g.make(1));
  for (int i = 0; i < 3; ++i) {
    PromptTemplate p;
    p.name = "P" + std::to_string(i);
    p.instruction = "Do " + random_word(rng) + " with {{Topic}}\n\"quoted\" \\ done";
    if (coin(rng, 0.5)) p.context = "ctx " + random_word(rng);
    if (coin(rng, 0.5)) p.examples = coin(rng, 0.3) ? "" : "e.g. " + random_word(rng);
    if (coin(rng, 0.5)) p.output_formatter = "Answer in JSON: {{{{\"k\": 1}";
    r.prompts.push_back(p);
  }
  for (int i = 0; i < 2; ++i) {
    EngineConfig e;
    e.name = "E" + std::to_string(i);
    e.kind = static_cast<EngineKind>(pick(rng, 0, 4));
    e.model_id = coin(rng, 0.7) ? "model-" + random_word(rng) : "";
    if (coin(rng, 0.5)) e.endpoint = "http://localhost:" + std::to_string(pick(rng, 1000, 9999));
    e.params.temperature = pick(rng, 0, 20) / 10.0;
    e.params.max_length = pick(rng, 1, 4096);
    e.params.top_p = pick(rng, 0, 100) / 100.0;
    e.params.frequency_penalty = pick(rng, -20, 20) / 10.0;
    e.params.presence_penalty = pick(rng, -20, 20) / 10.0;
    if (e.kind == EngineKind::mock || coin(rng, 0.5)) e.mock_script_ref = random_word(rng);
    if (e.model_id.empty() && e.kind != EngineKind::mock && e.kind != EngineKind::code_exec) {
      e.model_id = "gpt-" + random_word(rng);
    }
    e.timeout_seconds = pick(rng, 1, 120) + 0.5;
    r.engines.push_back(e);
  }
  if (coin(rng, 0.3)) r.extra = json{{"editor", {{"zoom", 1.25}}}}.dump();
  if (coin(rng, 0.5)) {
    r.created = "2024-01-0" + std::to_string(pick(rng, 1, 9)) + "T10:00:00Z";
    r.modified = r.created;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

void walk_worker(const json& w, std::vector<std::string>& out) {
  if (!w.value("enabled", true)) return;
  for (const auto& pre : w.value("preworkers", json::array())) {
    if (pre.value("kind", "") == "worker") walk_worker(pre, out);
  }
  out.push_back(w.at("id").get<std::string>());
}

void walk_units(const json& units, std::vector<std::string>& out) {
  for (const auto& u : units) {
    if (!u.value("enabled", true)) continue;
    const std::string kind = u.at("kind").get<std::string>();
    if (kind == "worker") {
      walk_worker(u, out);
    } else if (kind == "output") {
      walk_worker(u.at("worker"), out);
    } else if (kind == "container") {
      walk_units(u.value("preunits", json::array()), out);
      walk_units(u.value("units", json::array()), out);
    }
  }
}

struct OVal {
  std::string type;  // text, number, boolean, image_ref
  std::string s;
  double d = 0;
  bool b = false;
};

struct OError {};

std::optional<double> o_parse(const std::string& s) {
  static const std::regex re(R"([ \t\n\r]*[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?[ \t\n\r]*)");
  if (!std::regex_match(s, re)) return std::nullopt;
  const double d = std::strtod(s.c_str(), nullptr);
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::optional<double> o_num(const OVal& v) {
  if (v.type == "number") return v.d;
  if (v.type == "text") return o_parse(v.s);
  return std::nullopt;
}

std::string o_text(const OVal& v) {
  if (v.type == "number") return oracle_format_number(v.d);
  if (v.type == "boolean") return v.b ? "true" : "false";
  return v.s;
}

bool o_truthy(const OVal& v) {
  if (v.type == "boolean") return v.b;
  if (v.type == "number") return v.d != 0;
  if (v.type == "text") return !v.s.empty();
  return true;
}

OVal o_bool(bool b) { return {"boolean", "", 0, b}; }

OVal o_from_json(const json& j) {
  const std::string t = j.at("type").get<std::string>();
  if (t == "number") return {"number", "", j.at("value").get<double>(), false};
  if (t == "boolean") return o_bool(j.at("value").get<bool>());
  return {t, j.at("value").get<std::string>(), 0, false};
}

OVal o_eval(const json& e, const json& env) {
  if (e.contains("lit")) return o_from_json(e.at("lit"));
  if (e.contains("var")) {
    const auto name = e.at("var").get<std::string>();
    if (!env.contains(name)) throw OError{};
    return o_from_json(env.at(name));
  }
  if (e.contains("not")) return o_bool(!o_truthy(o_eval(e.at("not"), env)));
  const std::string op = e.at("op").get<std::string>();
  if (op == "and") {
    if (!o_truthy(o_eval(e.at("lhs"), env))) return o_bool(false);
    return o_bool(o_truthy(o_eval(e.at("rhs"), env)));
  }
  if (op == "or") {
    if (o_truthy(o_eval(e.at("lhs"), env))) return o_bool(true);
    return o_bool(o_truthy(o_eval(e.at("rhs"), env)));
  }
  const OVal l = o_eval(e.at("lhs"), env);
  const OVal r = o_eval(e.at("rhs"), env);
  const auto ln = o_num(l);
  const auto rn = o_num(r);
  if (op == "==" || op == "!=") {
    const bool eq = (ln && rn) ? *ln == *rn : o_text(l) == o_text(r);
    return o_bool(op == "==" ? eq : !eq);
  }
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    if (!ln || !rn) throw OError{};
    if (op == "<") return o_bool(*ln < *rn);
    if (op == "<=") return o_bool(*ln <= *rn);
    if (op == ">") return o_bool(*ln > *rn);
    return o_bool(*ln >= *rn);
  }
  if (op == "+") {
    if (ln && rn) {
      const double sum = *ln + *rn;
      if (!std::isfinite(sum)) throw OError{};
      return {"number", "", sum, false};
    }
    return {"text", o_text(l) + o_text(r), 0, false};
  }
  if (op == "contains") return o_bool(o_text(l).find(o_text(r)) != std::string::npos);
  throw std::logic_error("oracle: unknown operator " + op);
}

}  // namespace

std::vector<std::string> oracle_worker_order(const json& project) {
  std::vector<std::string> out;
  walk_units(project.at("chain"), out);
  return out;
}

json oracle_eval(const json& expr, const json& env) {
  try {
    const OVal v = o_eval(expr, env);
    return {{"type", v.type}, {"text", o_text(v)}};
  } catch (const OError&) {
    return {{"error", true}};
  }
}

std::string oracle_render(const PromptTemplate& t, const std::map<std::string, std::string>& bindings) {
  std::string joined;
  for (const auto* part : {t.context ? &*t.context : nullptr, &t.instruction,
                           t.examples ? &*t.examples : nullptr,
                           t.output_formatter ? &*t.output_formatter : nullptr}) {
    if (part == nullptr || part->empty()) continue;
    if (!joined.empty()) joined += "\n\n";
    joined += *part;
  }
  std::vector<std::string> names;
  for (const auto& [k, _] : bindings) names.push_back(k);
  std::sort(names.begin(), names.end(),
            [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  for (const auto& name : names) {
    const std::string needle = "{{" + name + "}}";
    const std::string& value = bindings.at(name);
    for (std::size_t pos = joined.find(needle); pos != std::string::npos;
         pos = joined.find(needle, pos + value.size())) {
      joined.replace(pos, needle.size(), value);
    }
  }
  return joined;
}

std::string oracle_format_number(double d) {
  if (d == 0) return "0";
  if (std::floor(d) == d && std::fabs(d) < 1e16) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", d);
    return buf;
  }
  // Fewest significant digits that read back exactly.
  char buf[64];
  int prec = 1;
  for (; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*e", prec - 1, d);
    if (std::strtod(buf, nullptr) == d) break;
  }
  std::string sci = buf;
  std::string sign;
  if (sci[0] == '-') {
    sign = "-";
    sci.erase(0, 1);
  }
  const auto epos = sci.find('e');
  std::string digits = sci.substr(0, epos);
  digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());
  const int exp = std::stoi(sci.substr(epos + 1));
  if (exp >= -4 && exp < 16) {
    std::string out;
    if (exp < 0) {
      out = "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
    } else if (static_cast<std::size_t>(exp) + 1 >= digits.size()) {
      out = digits + std::string(static_cast<std::size_t>(exp) + 1 - digits.size(), '0') + ".0";
    } else {
      out = digits.substr(0, static_cast<std::size_t>(exp) + 1) + "." +
            digits.substr(static_cast<std::size_t>(exp) + 1);
    }
    return sign + out;
  }
  std::string mant = digits.substr(0, 1);
  if (digits.size() > 1) mant += "." + digits.substr(1);
  char ebuf[16];
  std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
  return sign + mant + ebuf;
}

// ---------------------------------------------------------------------------

std::vector<TranscriptEvent> without_kind(const std::vector<TranscriptEvent>& in, EventKind kind) {
  std::vector<TranscriptEvent> out;
  for (const auto& e : in) {
    if (e.kind != kind) out.push_back(e);
  }
  return out;
}

bool same_events(const std::vector<TranscriptEvent>& a, const std::vector<TranscriptEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].kind != b[i].kind || a[i].unit_id != b[i].unit_id || a[i].payload != b[i].payload ||
        a[i].attempt != b[i].attempt) {
      return false;
    }
  }
  return true;
}

bool gapless(const std::vector<TranscriptEvent>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != i + 1) return false;
  }
  return true;
}

RunOutcome run_outcome(const ProjectRecord& record, const std::shared_ptr<MockScript>& mock,
                       const std::vector<std::string>& inputs) {
  auto gw = std::make_shared<EngineGateway>();
  gw->set_override(std::make_shared<MockScript>(*mock));
  RunOutcome out;
  try {
    out.events = run_to_completion(std::make_shared<const ProjectRecord>(record), inputs, gw);
  } catch (const ValidationFailed& e) {
    out.validation_error = e.report().to_string();
  }
  return out;
}

int run_command(const std::string& command, std::string* out) {
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return -1;
  std::array<char, 4096> buf{};
  std::string text;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (out != nullptr) *out = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testing_support
