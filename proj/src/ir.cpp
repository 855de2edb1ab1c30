#include "ctgc/ir.hpp"

namespace ctgc {

std::optional<VarId> Procedure::find_var(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<VarId>(i);
  return std::nullopt;
}

TypeEnv Procedure::type_env(const TypeTable& types) const {
  TypeEnv env;
  env.types = &types;
  env.var_types.reserve(vars.size());
  for (const auto& v : vars) env.var_types.push_back(v.type);
  return env;
}

TypeEnv Procedure::head_env(const ProcDecl& decl, const TypeTable& types) {
  TypeEnv env;
  env.types = &types;
  env.var_types = decl.arg_types;
  return env;
}

namespace {

template <typename G>
G* find_point(G& g, ProgramPoint p) {
  if (g.point == p) return &g;
  for (auto& c : g.goals)
    if (G* r = find_point(c, p)) return r;
  return nullptr;
}

}  // namespace

const Goal* Procedure::goal_at(ProgramPoint p) const { return find_point(body, p); }
Goal* Procedure::goal_at(ProgramPoint p) { return find_point(body, p); }

int Procedure::point_count() const {
  int n = 0;
  for_each_goal(body, [&](const Goal&) { ++n; });
  return n;
}

int Procedure::head_position(VarId v) const {
  for (std::size_t i = 0; i < head.size(); ++i)
    if (head[i] == v) return static_cast<int>(i);
  return -1;
}

const Procedure* Module::find_procedure(const ProcId& id) const {
  for (const auto& p : procedures)
    if (p.id() == id) return &p;
  return nullptr;
}

const ProcDecl* Module::find_decl(const ProcId& id) const {
  for (const auto& d : decls)
    if (d.id() == id) return &d;
  return nullptr;
}

const std::vector<ProcDecl>& builtin_decls() {
  static const std::vector<ProcDecl> decls = [] {
    std::vector<ProcDecl> out;
    const TypeExpr i{"int"};
    for (const char* name : {"int_add", "int_sub", "int_mul", "int_div", "int_mod"}) {
      ProcDecl d;
      d.name = name;
      d.arg_types = {i, i, i};
      d.arg_modes = {Mode::in, Mode::in, Mode::out};
      d.builtin = true;
      out.push_back(d);
    }
    for (const char* name : {"int_lt", "int_le", "int_gt", "int_ge", "int_eq", "int_ne"}) {
      ProcDecl d;
      d.name = name;
      d.arg_types = {i, i};
      d.arg_modes = {Mode::in, Mode::in};
      d.determinism = Determinism::semidet;
      d.builtin = true;
      out.push_back(d);
    }
    return out;
  }();
  return decls;
}

const ProcDecl* find_builtin(const ProcId& id) {
  for (const auto& d : builtin_decls())
    if (d.id() == id) return &d;
  return nullptr;
}

std::vector<VarId> goal_vars(const Goal& g) {
  std::vector<VarId> out;
  switch (g.kind) {
    case Goal::Kind::test:
    case Goal::Kind::assign:
      out = {g.lhs, g.rhs};
      break;
    case Goal::Kind::construct:
    case Goal::Kind::deconstruct:
      out.push_back(g.lhs);
      [[fallthrough]];
    case Goal::Kind::call:
      for (const auto& a : g.args)
        if (a.is_var()) out.push_back(a.var);
      break;
    case Goal::Kind::conj:
    case Goal::Kind::disj:
      break;
  }
  return out;
}

void collect_vars(const Goal& g, std::set<VarId>& out) {
  for_each_goal(g, [&](const Goal& x) {
    for (VarId v : goal_vars(x)) out.insert(v);
  });
}

}  // namespace ctgc
