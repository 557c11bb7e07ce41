#include "aichain/serialization.hpp"

#include <initializer_list>

namespace aichain::json_io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InvalidArgument(path + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key,
                                           const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(path + "." + key, "expected a string or null");
  return it->get<std::string>();
}

double number_field(const json& j, const char* key, const std::string& path, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) fail(path + "." + key, "expected a number");
  return it->get<double>();
}

bool bool_field(const json& j, const char* key, const std::string& path, bool fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

const json& array_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

std::string identifier_field(const json& j, const char* key, const std::string& path) {
  std::string s = string_field(j, key, path);
  if (!is_identifier(s)) fail(path + "." + key, "'" + s + "' is not a valid identifier");
  return s;
}

// Everything outside `known`, as compact JSON; empty when nothing is left.
std::string extract_extra(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (const char* k : known) {
      if (it.key() == k) {
        is_known = true;
        break;
      }
    }
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra.empty() ? std::string() : extra.dump();
}

void merge_extra(json& j, const std::string& extra) {
  if (extra.empty()) return;
  const json parsed = json::parse(extra);
  for (const auto& [k, v] : parsed.items()) {
    if (!j.contains(k)) j[k] = v;
  }
}

void put_meta(json& j, const BlockMeta& m) {
  j["enabled"] = m.enabled;
  j["collapsed"] = m.collapsed;
  if (m.comment) j["comment"] = *m.comment;
}

BlockMeta meta_from(const json& j, const std::string& path) {
  BlockMeta m;
  m.enabled = bool_field(j, "enabled", path, true);
  m.collapsed = bool_field(j, "collapsed", path, false);
  m.comment = optional_string(j, "comment", path);
  return m;
}

std::string id_from(const json& j, const std::string& path) {
  auto id = optional_string(j, "id", path);
  return id && !id->empty() ? *id : make_unit_id();
}

json preworker_to_json(const Preworker& p) {
  if (auto* in = std::get_if<ConsoleInput>(&p.source)) {
    return json{{"kind", "console_input"}, {"prompt_text", in->prompt_text}, {"var", in->var}};
  }
  if (auto* ref = std::get_if<VariableRef>(&p.source)) {
    return json{{"kind", "variable"}, {"name", ref->name}};
  }
  return to_json(std::get<WorkerSpec>(p.source));
}

Preworker preworker_from_json(const json& j, const std::string& path) {
  const std::string kind = string_field(j, "kind", path);
  if (kind == "console_input") {
    return console_input(string_field(j, "prompt_text", path), identifier_field(j, "var", path));
  }
  if (kind == "variable") return variable_ref(identifier_field(j, "name", path));
  if (kind == "worker") return nested_worker(worker_from_json(j, path));
  fail(path + ".kind", "unknown preworker kind '" + kind + "'");
}

}  // namespace

json parse(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(what + ": malformed JSON at byte " + std::to_string(e.byte) + ": " +
                          e.what());
  }
}

// ---------------------------------------------------------------------------

json to_json(const Value& v) {
  json j{{"type", std::string(kind_name(v.kind()))}};
  switch (v.kind()) {
    case Value::Kind::number: j["value"] = v.as_number(); break;
    case Value::Kind::boolean: j["value"] = v.as_boolean(); break;
    default: j["value"] = v.as_string(); break;
  }
  return j;
}

Value value_from_json(const json& j, const std::string& path) {
  // Bare JSON scalars are accepted as shorthand.
  if (j.is_string()) return Value::text(j.get<std::string>());
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number()) return Value::number(j.get<double>());

  const std::string type = string_field(j, "type", path);
  const json& raw = field(j, "value", path);
  auto kind = parse_kind(type);
  if (!kind) fail(path + ".type", "unknown value type '" + type + "'");
  try {
    switch (*kind) {
      case Value::Kind::text:
        if (!raw.is_string()) break;
        return Value::text(raw.get<std::string>());
      case Value::Kind::number:
        if (!raw.is_number()) break;
        return Value::number(raw.get<double>());
      case Value::Kind::boolean:
        if (!raw.is_boolean()) break;
        return Value::boolean(raw.get<bool>());
      case Value::Kind::image_ref:
        if (!raw.is_string()) break;
        return Value::image_ref(raw.get<std::string>());
    }
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  fail(path + ".value", "payload does not match type '" + type + "'");
}

json to_json(const Expr& e) {
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Literal>) {
          return json{{"lit", to_json(n.value)}};
        } else if constexpr (std::is_same_v<T, Expr::Var>) {
          return json{{"var", n.name}};
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          return json{{"op", std::string(op_symbol(n.op))},
                      {"lhs", to_json(*n.lhs)},
                      {"rhs", to_json(*n.rhs)}};
        } else {
          return json{{"not", to_json(*n.operand)}};
        }
      },
      e.node);
}

ExprPtr expr_from_json(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return parse_expr(j.get<std::string>());
    } catch (const InvalidArgument& e) {
      fail(path, e.what());
    }
  }
  if (!j.is_object()) fail(path, "expected an expression object or string");
  if (j.contains("lit")) return make_literal(value_from_json(j["lit"], path + ".lit"));
  if (j.contains("var")) {
    const std::string name = identifier_field(j, "var", path);
    return make_var(name);
  }
  if (j.contains("not")) return make_not(expr_from_json(j["not"], path + ".not"));
  if (j.contains("op")) {
    const std::string sym = string_field(j, "op", path);
    auto op = parse_op(sym);
    if (!op) fail(path + ".op", "unknown operator '" + sym + "'");
    return make_binary(*op, expr_from_json(field(j, "lhs", path), path + ".lhs"),
                       expr_from_json(field(j, "rhs", path), path + ".rhs"));
  }
  fail(path, "expression needs one of lit, var, op, not");
}

// ---------------------------------------------------------------------------

json to_json(const WorkerSpec& w) {
  json pre = json::array();
  for (const auto& p : w.preworkers) pre.push_back(preworker_to_json(p));
  json j{{"kind", "worker"},   {"id", w.id},         {"name", w.name},
         {"prompt", w.prompt_ref}, {"engine", w.engine_ref}, {"preworkers", std::move(pre)}};
  put_meta(j, w.meta);
  merge_extra(j, w.extra);
  return j;
}

WorkerSpec worker_from_json(const json& j, const std::string& path) {
  WorkerSpec w;
  w.id = id_from(j, path);
  w.name = identifier_field(j, "name", path);
  w.prompt_ref = string_field(j, "prompt", path);
  w.engine_ref = string_field(j, "engine", path);
  if (j.contains("preworkers")) {
    const json& pre = array_field(j, "preworkers", path);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      w.preworkers.push_back(
          preworker_from_json(pre[i], path + ".preworkers[" + std::to_string(i) + "]"));
    }
  }
  w.meta = meta_from(j, path);
  w.extra = extract_extra(j, {"kind", "id", "name", "prompt", "engine", "preworkers", "enabled",
                              "collapsed", "comment"});
  return w;
}

json units_to_json(const std::vector<Unit>& units) {
  json arr = json::array();
  for (const auto& u : units) arr.push_back(to_json(u));
  return arr;
}

std::vector<Unit> units_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of units");
  std::vector<Unit> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(unit_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json to_json(const Unit& u) {
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        json j;
        if constexpr (std::is_same_v<T, WorkerSpec>) {
          return to_json(n);
        } else if constexpr (std::is_same_v<T, ContainerSpec>) {
          j = json{{"kind", "container"},
                   {"id", n.id},
                   {"name", n.name},
                   {"preunits", units_to_json(n.preunits)},
                   {"units", units_to_json(n.units)}};
        } else if constexpr (std::is_same_v<T, ConsoleOutputStmt>) {
          j = json{{"kind", "console_output"}, {"id", n.id}, {"expr", to_json(*n.expr)}};
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          j = json{{"kind", "assign"}, {"id", n.id}, {"var", n.var}, {"expr", to_json(*n.expr)}};
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          j = json{{"kind", "if"},
                   {"id", n.id},
                   {"cond", to_json(*n.cond)},
                   {"then", units_to_json(n.then_units)},
                   {"else", units_to_json(n.else_units)}};
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          j = json{{"kind", "while"},
                   {"id", n.id},
                   {"cond", to_json(*n.cond)},
                   {"body", units_to_json(n.body)}};
        } else if constexpr (std::is_same_v<T, ForStmt>) {
          j = json{{"kind", "for"},
                   {"id", n.id},
                   {"var", n.var},
                   {"from", to_json(*n.from)},
                   {"to", to_json(*n.to)},
                   {"body", units_to_json(n.body)}};
        } else {
          j = json{{"kind", "output"}, {"id", n.id}, {"worker", to_json(n.worker)}};
        }
        put_meta(j, n.meta);
        merge_extra(j, n.extra);
        return j;
      },
      u.node);
}

Unit unit_from_json(const json& j, const std::string& path) {
  const std::string kind = string_field(j, "kind", path);
  if (kind == "worker") return unit(worker_from_json(j, path));

  auto extra = [&j](std::initializer_list<const char*> keys) {
    std::vector<const char*> all{"kind", "id", "enabled", "collapsed", "comment"};
    all.insert(all.end(), keys.begin(), keys.end());
    json filtered = j;
    for (const char* k : all) filtered.erase(k);
    return filtered.empty() ? std::string() : filtered.dump();
  };

  if (kind == "container") {
    ContainerSpec c;
    c.id = id_from(j, path);
    c.name = j.contains("name") ? string_field(j, "name", path) : std::string();
    c.preunits = j.contains("preunits") ? units_from_json(j["preunits"], path + ".preunits")
                                        : std::vector<Unit>{};
    c.units = units_from_json(field(j, "units", path), path + ".units");
    c.meta = meta_from(j, path);
    c.extra = extra({"name", "preunits", "units"});
    return unit(std::move(c));
  }
  if (kind == "console_output") {
    ConsoleOutputStmt s;
    s.id = id_from(j, path);
    s.expr = expr_from_json(field(j, "expr", path), path + ".expr");
    s.meta = meta_from(j, path);
    s.extra = extra({"expr"});
    return unit(std::move(s));
  }
  if (kind == "assign") {
    AssignStmt s;
    s.id = id_from(j, path);
    s.var = identifier_field(j, "var", path);
    s.expr = expr_from_json(field(j, "expr", path), path + ".expr");
    s.meta = meta_from(j, path);
    s.extra = extra({"var", "expr"});
    return unit(std::move(s));
  }
  if (kind == "if") {
    IfStmt s;
    s.id = id_from(j, path);
    s.cond = expr_from_json(field(j, "cond", path), path + ".cond");
    s.then_units = units_from_json(field(j, "then", path), path + ".then");
    s.else_units =
        j.contains("else") ? units_from_json(j["else"], path + ".else") : std::vector<Unit>{};
    s.meta = meta_from(j, path);
    s.extra = extra({"cond", "then", "else"});
    return unit(std::move(s));
  }
  if (kind == "while") {
    WhileStmt s;
    s.id = id_from(j, path);
    s.cond = expr_from_json(field(j, "cond", path), path + ".cond");
    s.body = units_from_json(field(j, "body", path), path + ".body");
    s.meta = meta_from(j, path);
    s.extra = extra({"cond", "body"});
    return unit(std::move(s));
  }
  if (kind == "for") {
    ForStmt s;
    s.id = id_from(j, path);
    s.var = identifier_field(j, "var", path);
    s.from = expr_from_json(field(j, "from", path), path + ".from");
    s.to = expr_from_json(field(j, "to", path), path + ".to");
    s.body = units_from_json(field(j, "body", path), path + ".body");
    s.meta = meta_from(j, path);
    s.extra = extra({"var", "from", "to", "body"});
    return unit(std::move(s));
  }
  if (kind == "output") {
    OutputStmt s;
    s.id = id_from(j, path);
    s.worker = worker_from_json(field(j, "worker", path), path + ".worker");
    s.meta = meta_from(j, path);
    s.extra = extra({"worker"});
    return unit(std::move(s));
  }
  fail(path + ".kind", "unknown unit kind '" + kind + "'");
}

json variables_to_json(const std::vector<VariableDecl>& vars) {
  json arr = json::array();
  for (const auto& v : vars) arr.push_back(json{{"name", v.name}, {"value", to_json(v.initial)}});
  return arr;
}

std::vector<VariableDecl> variables_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<VariableDecl> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    VariableDecl d;
    d.name = identifier_field(j[i], "name", p);
    d.initial = j[i].contains("value") ? value_from_json(j[i]["value"], p + ".value") : Value{};
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const PromptTemplate& p) {
  auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  return json{{"name", p.name},
              {"context", opt(p.context)},
              {"instruction", p.instruction},
              {"examples", opt(p.examples)},
              {"output_formatter", opt(p.output_formatter)}};
}

PromptTemplate prompt_from_json(const json& j, const std::string& path) {
  PromptTemplate p;
  p.name = identifier_field(j, "name", path);
  p.context = optional_string(j, "context", path);
  p.instruction = string_field(j, "instruction", path);
  p.examples = optional_string(j, "examples", path);
  p.output_formatter = optional_string(j, "output_formatter", path);
  try {
    check_template(p);
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return p;
}

json prompts_to_json(const std::vector<PromptTemplate>& prompts) {
  json arr = json::array();
  for (const auto& p : prompts) arr.push_back(to_json(p));
  return arr;
}

std::vector<PromptTemplate> prompts_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of prompts");
  std::vector<PromptTemplate> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(prompt_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json to_json(const EngineParams& p) {
  return json{{"temperature", p.temperature},
              {"max_length", p.max_length},
              {"top_p", p.top_p},
              {"frequency_penalty", p.frequency_penalty},
              {"presence_penalty", p.presence_penalty}};
}

EngineParams params_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  EngineParams p;
  p.temperature = number_field(j, "temperature", path, p.temperature);
  const double max_len = number_field(j, "max_length", path, p.max_length);
  if (max_len != static_cast<double>(static_cast<int>(max_len))) {
    fail(path + ".max_length", "expected an integer");
  }
  p.max_length = static_cast<int>(max_len);
  p.top_p = number_field(j, "top_p", path, p.top_p);
  p.frequency_penalty = number_field(j, "frequency_penalty", path, p.frequency_penalty);
  p.presence_penalty = number_field(j, "presence_penalty", path, p.presence_penalty);
  try {
    check_params(p);
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return p;
}

json to_json(const EngineConfig& c) {
  auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  return json{{"name", c.name},
              {"kind", std::string(engine_kind_name(c.kind))},
              {"model_id", c.model_id},
              {"endpoint", opt(c.endpoint)},
              {"params", to_json(c.params)},
              {"mock_script_ref", opt(c.mock_script_ref)},
              {"api_key_env", c.api_key_env},
              {"timeout_seconds", c.timeout_seconds},
              {"sandbox", c.sandbox}};
}

EngineConfig engine_from_json(const json& j, const std::string& path) {
  EngineConfig c;
  c.name = identifier_field(j, "name", path);
  const std::string kind = string_field(j, "kind", path);
  auto k = parse_engine_kind(kind);
  if (!k) fail(path + ".kind", "unknown engine kind '" + kind + "'");
  c.kind = *k;
  c.model_id = j.contains("model_id") ? string_field(j, "model_id", path) : std::string();
  c.endpoint = optional_string(j, "endpoint", path);
  if (j.contains("params")) c.params = params_from_json(j["params"], path + ".params");
  c.mock_script_ref = optional_string(j, "mock_script_ref", path);
  if (j.contains("api_key_env")) c.api_key_env = string_field(j, "api_key_env", path);
  c.timeout_seconds = number_field(j, "timeout_seconds", path, c.timeout_seconds);
  c.sandbox = bool_field(j, "sandbox", path, false);
  try {
    check_config(c);
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return c;
}

json engines_to_json(const std::vector<EngineConfig>& engines) {
  json arr = json::array();
  for (const auto& e : engines) arr.push_back(to_json(e));
  return arr;
}

std::vector<EngineConfig> engines_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of engines");
  std::vector<EngineConfig> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(engine_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json to_json(const MockScript& m) {
  json rules = json::array();
  for (const auto& r : m.rules()) rules.push_back(json{{"match", r.match}, {"response", r.response}});
  return json{{"rules", std::move(rules)}, {"default", m.default_response()}};
}

MockScript mock_from_json(const json& j, const std::string& path) {
  std::vector<MockScript::Rule> rules;
  if (j.contains("rules")) {
    const json& arr = array_field(j, "rules", path);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = path + ".rules[" + std::to_string(i) + "]";
      rules.push_back({string_field(arr[i], "match", p), string_field(arr[i], "response", p)});
    }
  }
  return MockScript(std::move(rules), string_field(j, "default", path));
}

}  // namespace aichain::json_io

namespace aichain::json_io {

json to_json(const ValidationReport& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    diags.push_back({{"unit_id", d.unit_id},
                     {"severity", d.severity == Severity::error ? "error" : "warning"},
                     {"message", d.message}});
  }
  return {{"valid", r.valid()}, {"diagnostics", std::move(diags)}};
}

}  // namespace aichain::json_io
