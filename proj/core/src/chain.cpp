#include "aichain/chain.hpp"

#include <cstdio>
#include <random>

namespace aichain {

std::string make_unit_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "u-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

const std::string& unit_id(const Unit& u) {
  return std::visit([](const auto& n) -> const std::string& { return n.id; }, u.node);
}

const BlockMeta& unit_meta(const Unit& u) {
  return std::visit([](const auto& n) -> const BlockMeta& { return n.meta; }, u.node);
}

BlockMeta& unit_meta(Unit& u) {
  return std::visit([](auto& n) -> BlockMeta& { return n.meta; }, u.node);
}

std::string_view unit_kind(const Unit& u) {
  static constexpr std::string_view names[] = {"worker", "container", "console_output", "assign",
                                               "if",     "while",     "for",            "output"};
  return names[u.node.index()];
}

WorkerSpec make_worker(std::string name, std::string prompt_ref, std::string engine_ref,
                       std::vector<Preworker> preworkers) {
  WorkerSpec w;
  w.id = make_unit_id();
  w.name = std::move(name);
  w.prompt_ref = std::move(prompt_ref);
  w.engine_ref = std::move(engine_ref);
  w.preworkers = std::move(preworkers);
  return w;
}

Preworker console_input(std::string prompt_text, std::string var) {
  return Preworker{ConsoleInput{std::move(prompt_text), std::move(var)}};
}

Preworker variable_ref(std::string name) { return Preworker{VariableRef{std::move(name)}}; }

Preworker nested_worker(WorkerSpec w) { return Preworker{std::move(w)}; }

Unit unit(WorkerSpec w) { return Unit{std::move(w)}; }
Unit unit(ContainerSpec c) { return Unit{std::move(c)}; }
Unit unit(ConsoleOutputStmt s) { return Unit{std::move(s)}; }
Unit unit(AssignStmt s) { return Unit{std::move(s)}; }
Unit unit(IfStmt s) { return Unit{std::move(s)}; }
Unit unit(WhileStmt s) { return Unit{std::move(s)}; }
Unit unit(ForStmt s) { return Unit{std::move(s)}; }
Unit unit(OutputStmt s) { return Unit{std::move(s)}; }

Unit container(std::string name, std::vector<Unit> preunits, std::vector<Unit> units) {
  ContainerSpec c;
  c.id = make_unit_id();
  c.name = std::move(name);
  c.preunits = std::move(preunits);
  c.units = std::move(units);
  return unit(std::move(c));
}

Unit console_output(ExprPtr e) {
  ConsoleOutputStmt s;
  s.id = make_unit_id();
  s.expr = std::move(e);
  return unit(std::move(s));
}

Unit assign(std::string var, ExprPtr e) {
  AssignStmt s;
  s.id = make_unit_id();
  s.var = std::move(var);
  s.expr = std::move(e);
  return unit(std::move(s));
}

Unit if_stmt(ExprPtr cond, std::vector<Unit> then_units, std::vector<Unit> else_units) {
  IfStmt s;
  s.id = make_unit_id();
  s.cond = std::move(cond);
  s.then_units = std::move(then_units);
  s.else_units = std::move(else_units);
  return unit(std::move(s));
}

Unit while_stmt(ExprPtr cond, std::vector<Unit> body) {
  WhileStmt s;
  s.id = make_unit_id();
  s.cond = std::move(cond);
  s.body = std::move(body);
  return unit(std::move(s));
}

Unit for_stmt(std::string var, ExprPtr from, ExprPtr to, std::vector<Unit> body) {
  ForStmt s;
  s.id = make_unit_id();
  s.var = std::move(var);
  s.from = std::move(from);
  s.to = std::move(to);
  s.body = std::move(body);
  return unit(std::move(s));
}

Unit output(WorkerSpec w) {
  OutputStmt s;
  s.id = make_unit_id();
  s.worker = std::move(w);
  return unit(std::move(s));
}

}  // namespace aichain
