#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aichain/expr.hpp"
#include "aichain/value.hpp"

namespace aichain {

// Editor-facing flags carried by every block. Only `enabled` is semantic.
struct BlockMeta {
  bool enabled = true;
  bool collapsed = false;
  std::optional<std::string> comment;
};

// Reads one line from the console and binds it (as text) to `var`.
struct ConsoleInput {
  std::string prompt_text;
  std::string var;
};

// Feeds an existing variable or earlier step output into a worker.
struct VariableRef {
  std::string name;
};

struct Preworker;
struct Unit;

// Leaf unit: gathers its preworker inputs, renders a prompt and runs it on an engine.
struct WorkerSpec {
  std::string id;
  std::string name;  // step name; binds the worker's output
  std::vector<Preworker> preworkers;
  std::string prompt_ref;
  std::string engine_ref;
  BlockMeta meta;
  std::string extra;  // unknown JSON fields, kept verbatim for re-emission
};

struct Preworker {
  std::variant<ConsoleInput, VariableRef, WorkerSpec> source;
};

// Composite worker: preunits run first, then units.
struct ContainerSpec {
  std::string id;
  std::string name;
  std::vector<Unit> preunits;
  std::vector<Unit> units;
  BlockMeta meta;
  std::string extra;
};

struct ConsoleOutputStmt {
  std::string id;
  ExprPtr expr;
  BlockMeta meta;
  std::string extra;
};

struct AssignStmt {
  std::string id;
  std::string var;
  ExprPtr expr;
  BlockMeta meta;
  std::string extra;
};

struct IfStmt {
  std::string id;
  ExprPtr cond;
  std::vector<Unit> then_units;
  std::vector<Unit> else_units;
  BlockMeta meta;
  std::string extra;
};

struct WhileStmt {
  std::string id;
  ExprPtr cond;
  std::vector<Unit> body;
  BlockMeta meta;
  std::string extra;
};

// Inclusive ascending integer range; empty when from > to.
struct ForStmt {
  std::string id;
  std::string var;
  ExprPtr from;
  ExprPtr to;
  std::vector<Unit> body;
  BlockMeta meta;
  std::string extra;
};

// Routes the wrapped worker's output to the Output window.
struct OutputStmt {
  std::string id;
  WorkerSpec worker;
  BlockMeta meta;
  std::string extra;
};

struct Unit {
  std::variant<WorkerSpec, ContainerSpec, ConsoleOutputStmt, AssignStmt, IfStmt, WhileStmt,
               ForStmt, OutputStmt>
      node;
};

struct VariableDecl {
  std::string name;
  Value initial;
};

struct ChainProgram {
  std::string name;
  std::vector<VariableDecl> variables;
  std::vector<Unit> top_level;
};

// Fresh editor identity for a new block.
std::string make_unit_id();

const std::string& unit_id(const Unit& u);
const BlockMeta& unit_meta(const Unit& u);
BlockMeta& unit_meta(Unit& u);

// Schema discriminator: worker, container, console_output, assign, if, while, for, output.
std::string_view unit_kind(const Unit& u);

// Convenience builders used by tests, the skeleton assembler and tooling.
WorkerSpec make_worker(std::string name, std::string prompt_ref, std::string engine_ref,
                       std::vector<Preworker> preworkers = {});
Preworker console_input(std::string prompt_text, std::string var);
Preworker variable_ref(std::string name);
Preworker nested_worker(WorkerSpec w);

Unit unit(WorkerSpec w);
Unit unit(ContainerSpec c);
Unit unit(ConsoleOutputStmt s);
Unit unit(AssignStmt s);
Unit unit(IfStmt s);
Unit unit(WhileStmt s);
Unit unit(ForStmt s);
Unit unit(OutputStmt s);

Unit container(std::string name, std::vector<Unit> preunits, std::vector<Unit> units);
Unit console_output(ExprPtr e);
Unit assign(std::string var, ExprPtr e);
Unit if_stmt(ExprPtr cond, std::vector<Unit> then_units, std::vector<Unit> else_units = {});
Unit while_stmt(ExprPtr cond, std::vector<Unit> body);
Unit for_stmt(std::string var, ExprPtr from, ExprPtr to, std::vector<Unit> body);
Unit output(WorkerSpec w);

// Calls `fn(const WorkerSpec&, bool inside_output)` for every worker in the
// tree, preworkers included, in document order.
template <typename Fn>
void for_each_worker(const std::vector<Unit>& units, Fn&& fn);

namespace detail {

template <typename Fn>
void visit_worker(const WorkerSpec& w, bool in_output, Fn& fn) {
  for (const auto& pre : w.preworkers) {
    if (auto* nested = std::get_if<WorkerSpec>(&pre.source)) visit_worker(*nested, false, fn);
  }
  fn(w, in_output);
}

template <typename Fn>
void visit_units(const std::vector<Unit>& units, Fn& fn) {
  for (const auto& u : units) {
    std::visit(
        [&fn](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, WorkerSpec>) {
            visit_worker(n, false, fn);
          } else if constexpr (std::is_same_v<T, OutputStmt>) {
            visit_worker(n.worker, true, fn);
          } else if constexpr (std::is_same_v<T, ContainerSpec>) {
            visit_units(n.preunits, fn);
            visit_units(n.units, fn);
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            visit_units(n.then_units, fn);
            visit_units(n.else_units, fn);
          } else if constexpr (std::is_same_v<T, WhileStmt> || std::is_same_v<T, ForStmt>) {
            visit_units(n.body, fn);
          }
        },
        u.node);
  }
}

}  // namespace detail

template <typename Fn>
void for_each_worker(const std::vector<Unit>& units, Fn&& fn) {
  detail::visit_units(units, fn);
}

}  // namespace aichain
