#pragma once

#include "ctgc/alias.hpp"
#include "ctgc/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ctgc {

using ProgramPoint = int;

enum class Mode { in, out };
enum class Determinism { det, semidet };

struct ProcId {
  std::string name;
  std::size_t arity = 0;

  std::string str() const { return name + "/" + std::to_string(arity); }
};

inline bool operator==(const ProcId& a, const ProcId& b) {
  return a.name == b.name && a.arity == b.arity;
}
inline bool operator<(const ProcId& a, const ProcId& b) {
  return a.name != b.name ? a.name < b.name : a.arity < b.arity;
}

/// Manual sharing annotation of a foreign procedure. Variables of `aliases`
/// are argument positions; `head_names` names them in the text form.
struct ForeignAlias {
  std::vector<std::string> head_names;
  AliasSet aliases;
  std::string text;
};

struct ProcDecl {
  std::string name;
  std::vector<TypeExpr> arg_types;
  std::vector<Mode> arg_modes;
  Determinism determinism = Determinism::det;
  bool foreign = false;
  bool builtin = false;
  std::optional<ForeignAlias> foreign_alias;

  std::size_t arity() const { return arg_types.size(); }
  ProcId id() const { return {name, arity()}; }
  bool can_fail() const { return determinism == Determinism::semidet; }
};

/// An integer literal or a zero-arity functor used as an argument.
struct Literal {
  enum class Kind { integer, constant };
  Kind kind = Kind::integer;
  std::int64_t value = 0;
  std::string functor;
};

struct Arg {
  VarId var = -1;
  std::optional<Literal> literal;

  bool is_var() const { return !literal.has_value(); }
  static Arg of_var(VarId v) { return Arg{v, std::nullopt}; }
  static Arg of_literal(Literal l) { return Arg{-1, std::move(l)}; }
};

/// A goal of a normalized body. Each goal has a unique program point,
/// assigned in pre-order (left-to-right) over the whole body.
struct Goal {
  enum class Kind { test, assign, construct, deconstruct, call, conj, disj };

  Kind kind = Kind::conj;
  ProgramPoint point = -1;
  int line = 0;

  // test: lhs == rhs; assign: lhs := rhs; construct/deconstruct: lhs is the term variable.
  VarId lhs = -1;
  VarId rhs = -1;

  // construct/deconstruct: functor and its arguments (a literal integer term
  // has functor "" and int_value set).
  std::string functor;
  std::optional<std::int64_t> int_value;
  std::vector<Arg> args;

  // call
  std::string callee;

  // conj/disj
  std::vector<Goal> goals;

  // Annotations filled by the reuse pass.
  std::optional<ProgramPoint> reuse_of;
  bool cacheable = false;

  bool is_atomic() const { return kind != Kind::conj && kind != Kind::disj; }
  ProcId callee_id() const { return {callee, args.size()}; }
};

struct Variable {
  std::string name;
  TypeExpr type;
};

struct Procedure {
  ProcDecl decl;
  std::vector<VarId> head;
  Goal body;
  std::vector<Variable> vars;
  int line = 0;

  ProcId id() const { return decl.id(); }
  const std::string& var_name(VarId v) const { return vars.at(static_cast<std::size_t>(v)).name; }
  const TypeExpr& var_type(VarId v) const { return vars.at(static_cast<std::size_t>(v)).type; }
  std::optional<VarId> find_var(const std::string& name) const;

  /// Type environment over the procedure variables.
  TypeEnv type_env(const TypeTable& types) const;
  /// Type environment over head positions (argument i is variable i).
  static TypeEnv head_env(const ProcDecl& decl, const TypeTable& types);

  const Goal* goal_at(ProgramPoint p) const;
  Goal* goal_at(ProgramPoint p);
  int point_count() const;
  /// Head position of a variable, or -1.
  int head_position(VarId v) const;
};

struct Module {
  std::string name;
  std::vector<std::string> imports;
  std::vector<TypeDef> types;          // defined here, in source order
  std::vector<ProcDecl> decls;         // declared here (including foreign)
  std::vector<Procedure> procedures;   // clauses, in source order
  TypeTable type_table;                // own + imported types

  const Procedure* find_procedure(const ProcId& id) const;
  const ProcDecl* find_decl(const ProcId& id) const;
};

/// Procedures that exist in every module.
const std::vector<ProcDecl>& builtin_decls();
const ProcDecl* find_builtin(const ProcId& id);

/// Variables read or written by an atomic goal (literals excluded).
std::vector<VarId> goal_vars(const Goal& g);
/// Variables of a goal and all its subgoals.
void collect_vars(const Goal& g, std::set<VarId>& out);

/// Visits goals in pre-order.
template <typename F>
void for_each_goal(const Goal& g, F&& f) {
  f(g);
  for (const auto& c : g.goals) for_each_goal(c, f);
}
template <typename F>
void for_each_goal(Goal& g, F&& f) {
  f(g);
  for (auto& c : g.goals) for_each_goal(c, f);
}

}  // namespace ctgc
