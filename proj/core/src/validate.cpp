#include "aichain/validate.hpp"

#include <map>
#include <sstream>

namespace aichain {

bool ValidationReport::valid() const noexcept { return error_count() == 0; }

std::size_t ValidationReport::error_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::error) ++n;
  }
  return n;
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& d : diagnostics) {
    out << (d.severity == Severity::error ? "error" : "warning") << " ["
        << (d.unit_id.empty() ? "program" : d.unit_id) << "]: " << d.message << '\n';
  }
  return out.str();
}

ValidationFailed::ValidationFailed(ValidationReport report)
    : Error("program failed validation:\n" + report.to_string()), report_(std::move(report)) {}

namespace {

class Validator {
 public:
  Validator(const ChainProgram& program, const NameSet& prompts, const NameSet& engines)
      : program_(program), prompts_(prompts), engines_(engines) {}

  ValidationReport run() {
    for (const auto& v : program_.variables) {
      if (!is_identifier(v.name)) error("", "invalid variable name '" + v.name + "'");
      if (!declared_.insert(v.name).second) error("", "duplicate variable name '" + v.name + "'");
    }
    collect_step_names();
    check_units(program_.top_level);
    return std::move(report_);
  }

 private:
  void error(const std::string& id, std::string msg) {
    report_.diagnostics.push_back({id, Severity::error, std::move(msg)});
  }
  void warning(const std::string& id, std::string msg) {
    report_.diagnostics.push_back({id, Severity::warning, std::move(msg)});
  }

  void collect_step_names() { collect_units(program_.top_level); }

  // Disabled blocks count as absent: they declare nothing and are not checked.
  void collect_worker(const WorkerSpec& w) {
    if (!w.meta.enabled) return;
    for (const auto& pre : w.preworkers) {
      if (auto* nested = std::get_if<WorkerSpec>(&pre.source)) collect_worker(*nested);
    }
    if (declared_.count(w.name) != 0 || steps_.count(w.name) != 0) duplicate_ids_.insert(w.id);
    steps_.insert(w.name);
  }

  void collect_units(const std::vector<Unit>& units) {
    for (const auto& u : units) {
      if (!unit_meta(u).enabled) continue;
      std::visit(
          [this](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, WorkerSpec>) {
              collect_worker(n);
            } else if constexpr (std::is_same_v<T, OutputStmt>) {
              collect_worker(n.worker);
            } else if constexpr (std::is_same_v<T, ContainerSpec>) {
              collect_units(n.preunits);
              collect_units(n.units);
            } else if constexpr (std::is_same_v<T, IfStmt>) {
              collect_units(n.then_units);
              collect_units(n.else_units);
            } else if constexpr (std::is_same_v<T, WhileStmt> || std::is_same_v<T, ForStmt>) {
              collect_units(n.body);
            }
          },
          u.node);
    }
  }

  static std::size_t enabled_count(const std::vector<Unit>& units) {
    std::size_t n = 0;
    for (const auto& u : units) {
      if (unit_meta(u).enabled) ++n;
    }
    return n;
  }

  bool resolves(const std::string& name) const {
    if (declared_.count(name) != 0 || steps_.count(name) != 0) return true;
    for (const auto& v : loop_vars_) {
      if (v == name) return true;
    }
    return false;
  }

  void check_id(const std::string& id) {
    if (id.empty()) {
      error(id, "unit id is empty");
    } else if (!ids_.insert(id).second) {
      error(id, "duplicate unit id '" + id + "' (unit appears twice in the tree)");
    }
  }

  void check_expr(const std::string& id, const ExprPtr& e, std::string_view what) {
    if (!e) {
      error(id, "missing " + std::string(what) + " expression");
      return;
    }
    for (const auto& name : referenced_vars(*e)) {
      if (!resolves(name)) error(id, "unresolved variable reference '" + name + "'");
    }
  }

  void check_worker(const WorkerSpec& w) {
    check_id(w.id);
    if (!is_identifier(w.name)) error(w.id, "invalid step name '" + w.name + "'");
    if (duplicate_ids_.count(w.id) != 0 && !reported_dupes_.count(w.id)) {
      reported_dupes_.insert(w.id);
      error(w.id, "duplicate step name '" + w.name + "'");
    }
    if (prompts_.count(w.prompt_ref) == 0) {
      error(w.id, "unresolved prompt reference '" + w.prompt_ref + "'");
    }
    if (engines_.count(w.engine_ref) == 0) {
      error(w.id, "unresolved engine reference '" + w.engine_ref + "'");
    }
    for (const auto& pre : w.preworkers) {
      if (auto* in = std::get_if<ConsoleInput>(&pre.source)) {
        if (declared_.count(in->var) == 0) {
          error(w.id, "console input binds undeclared variable '" + in->var + "'");
        }
      } else if (auto* ref = std::get_if<VariableRef>(&pre.source)) {
        if (!resolves(ref->name)) {
          error(w.id, "unresolved variable reference '" + ref->name + "'");
        } else if (ref->name == w.name) {
          error(w.id, "worker '" + w.name + "' takes its own output as input");
        }
      } else if (const auto& nested = std::get<WorkerSpec>(pre.source); nested.meta.enabled) {
        check_worker(nested);
      }
    }
  }

  void check_units(const std::vector<Unit>& units) {
    for (const auto& u : units) check_unit(u);
  }

  void check_unit(const Unit& u) {
    if (!unit_meta(u).enabled) return;
    std::visit(
        [this](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, WorkerSpec>) {
            check_worker(n);
          } else if constexpr (std::is_same_v<T, ContainerSpec>) {
            check_id(n.id);
            if (!n.name.empty() && !is_identifier(n.name)) {
              error(n.id, "invalid container name '" + n.name + "'");
            }
            if (enabled_count(n.units) == 0) error(n.id, "container '" + n.name + "' has no units");
            check_units(n.preunits);
            check_units(n.units);
          } else if constexpr (std::is_same_v<T, ConsoleOutputStmt>) {
            check_id(n.id);
            check_expr(n.id, n.expr, "output");
          } else if constexpr (std::is_same_v<T, AssignStmt>) {
            check_id(n.id);
            if (declared_.count(n.var) == 0) {
              error(n.id, "assignment to undeclared variable '" + n.var + "'");
            }
            check_expr(n.id, n.expr, "assigned");
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            check_id(n.id);
            check_expr(n.id, n.cond, "condition");
            check_units(n.then_units);
            check_units(n.else_units);
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            check_id(n.id);
            check_expr(n.id, n.cond, "condition");
            if (enabled_count(n.body) == 0) warning(n.id, "while loop has an empty body");
            check_units(n.body);
          } else if constexpr (std::is_same_v<T, ForStmt>) {
            check_id(n.id);
            if (!is_identifier(n.var)) error(n.id, "invalid loop variable '" + n.var + "'");
            if (steps_.count(n.var) != 0) {
              error(n.id, "loop variable '" + n.var + "' collides with a step name");
            }
            check_expr(n.id, n.from, "range start");
            check_expr(n.id, n.to, "range end");
            loop_vars_.push_back(n.var);
            check_units(n.body);
            loop_vars_.pop_back();
          } else if constexpr (std::is_same_v<T, OutputStmt>) {
            check_id(n.id);
            if (n.worker.meta.enabled) check_worker(n.worker);
          }
        },
        u.node);
  }

  const ChainProgram& program_;
  const NameSet& prompts_;
  const NameSet& engines_;
  ValidationReport report_;
  NameSet declared_;
  NameSet steps_;
  NameSet ids_;
  NameSet duplicate_ids_;
  NameSet reported_dupes_;
  std::vector<std::string> loop_vars_;
};

bool meta_equal(const BlockMeta& a, const BlockMeta& b) {
  return a.enabled == b.enabled && a.comment == b.comment;
}

bool expr_ptr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return expr_equal(*a, *b);
}

bool units_equal(const std::vector<Unit>& a, const std::vector<Unit>& b);

bool workers_equal(const WorkerSpec& a, const WorkerSpec& b) {
  if (a.name != b.name || a.prompt_ref != b.prompt_ref || a.engine_ref != b.engine_ref ||
      !meta_equal(a.meta, b.meta) || a.preworkers.size() != b.preworkers.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.preworkers.size(); ++i) {
    const auto& pa = a.preworkers[i].source;
    const auto& pb = b.preworkers[i].source;
    if (pa.index() != pb.index()) return false;
    if (auto* ia = std::get_if<ConsoleInput>(&pa)) {
      const auto& ib = std::get<ConsoleInput>(pb);
      if (ia->prompt_text != ib.prompt_text || ia->var != ib.var) return false;
    } else if (auto* ra = std::get_if<VariableRef>(&pa)) {
      if (ra->name != std::get<VariableRef>(pb).name) return false;
    } else if (!workers_equal(std::get<WorkerSpec>(pa), std::get<WorkerSpec>(pb))) {
      return false;
    }
  }
  return true;
}

bool unit_equal(const Unit& a, const Unit& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&b](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if (!meta_equal(x.meta, y.meta)) return false;
        if constexpr (std::is_same_v<T, WorkerSpec>) {
          return workers_equal(x, y);
        } else if constexpr (std::is_same_v<T, ContainerSpec>) {
          return x.name == y.name && units_equal(x.preunits, y.preunits) &&
                 units_equal(x.units, y.units);
        } else if constexpr (std::is_same_v<T, ConsoleOutputStmt>) {
          return expr_ptr_equal(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, AssignStmt>) {
          return x.var == y.var && expr_ptr_equal(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          return expr_ptr_equal(x.cond, y.cond) && units_equal(x.then_units, y.then_units) &&
                 units_equal(x.else_units, y.else_units);
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          return expr_ptr_equal(x.cond, y.cond) && units_equal(x.body, y.body);
        } else if constexpr (std::is_same_v<T, ForStmt>) {
          return x.var == y.var && expr_ptr_equal(x.from, y.from) &&
                 expr_ptr_equal(x.to, y.to) && units_equal(x.body, y.body);
        } else {
          return workers_equal(x.worker, y.worker);
        }
      },
      a.node);
}

bool units_equal(const std::vector<Unit>& a, const std::vector<Unit>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!unit_equal(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

ValidationReport validate(const ChainProgram& program, const NameSet& prompts,
                          const NameSet& engines) {
  return Validator(program, prompts, engines).run();
}

bool structural_equal(const ChainProgram& a, const ChainProgram& b) {
  if (a.name != b.name || a.variables.size() != b.variables.size()) return false;
  for (std::size_t i = 0; i < a.variables.size(); ++i) {
    if (a.variables[i].name != b.variables[i].name ||
        !(a.variables[i].initial == b.variables[i].initial)) {
      return false;
    }
  }
  return units_equal(a.top_level, b.top_level);
}

}  // namespace aichain
