#pragma once

// Possible-structure-sharing domain.
//
// A Datastructure names a subterm position of a program variable through a
// selector path. A FieldSel (f, i) steps into argument i of functor f; a
// TypeSel(t) stands for every position at or below a t-typed position of
// the subterm selected so far. An alias pair states that the two positions
// may be the very same heap term; equality of two positions implies
// equality of all their common extensions, which is left implicit.

#include "ctgc/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ctgc {

using VarId = int;

struct Selector {
  enum class Kind { field, type };

  Kind kind = Kind::field;
  std::string functor;     // field
  std::size_t arity = 0;   // field
  std::size_t index = 0;   // field, 1-based
  TypeExpr type;           // type

  static Selector field(std::string functor, std::size_t arity, std::size_t index);
  static Selector of_type(TypeExpr t);

  bool is_type() const { return kind == Kind::type; }
};

bool operator==(const Selector& a, const Selector& b);
bool operator<(const Selector& a, const Selector& b);

using SelectorPath = std::vector<Selector>;

struct Datastructure {
  VarId var = -1;
  SelectorPath path;
};

bool operator==(const Datastructure& a, const Datastructure& b);
bool operator<(const Datastructure& a, const Datastructure& b);

/// Unordered pair, stored with first <= second.
struct AliasPair {
  Datastructure first;
  Datastructure second;

  AliasPair() = default;
  AliasPair(Datastructure a, Datastructure b);
};

bool operator==(const AliasPair& a, const AliasPair& b);
bool operator<(const AliasPair& a, const AliasPair& b);

class AliasSet {
public:
  AliasSet() = default;
  static AliasSet top();

  bool is_top() const { return top_; }
  bool empty() const { return !top_ && pairs_.empty(); }
  std::size_t size() const { return pairs_.size(); }
  const std::set<AliasPair>& pairs() const { return pairs_; }

  /// Returns true if the pair was new. No-op on Top.
  bool insert(AliasPair p);
  bool contains(const AliasPair& p) const { return pairs_.count(p) != 0; }
  bool erase(const AliasPair& p) { return pairs_.erase(p) != 0; }

  friend bool operator==(const AliasSet& a, const AliasSet& b) {
    return a.top_ == b.top_ && a.pairs_ == b.pairs_;
  }

private:
  bool top_ = false;
  std::set<AliasPair> pairs_;
};

/// Variable types needed to interpret selector paths.
struct TypeEnv {
  const TypeTable* types = nullptr;
  std::vector<TypeExpr> var_types;

  const TypeExpr& type_of(VarId v) const;
};

/// Type of the position selected by `path` starting from `root`.
TypeExpr selected_type(const TypeExpr& root, const SelectorPath& path, const TypeTable& types);
TypeExpr selected_type(const Datastructure& d, const TypeEnv& env);

/// Truncates a path at the first revisited selected type, replacing the
/// remainder by a type selector; drops anything following a type selector.
/// Throws TypeError on an ill-typed path.
Datastructure normalize_path(const Datastructure& d, const TypeEnv& env);

/// Replaces each non-empty path by the single type selector of its selected type.
AliasSet widen_alias(const AliasSet& a, const TypeEnv& env);

/// Widens only when the set holds more than `threshold` pairs. nullopt disables widening.
AliasSet maybe_widen(const AliasSet& a, std::optional<std::size_t> threshold, const TypeEnv& env);

/// Concretization containment: every pair of `a` is covered by a pair of `b`.
bool alias_leq(const AliasSet& a, const AliasSet& b, const TypeEnv& env);
AliasSet alias_join(const AliasSet& a, const AliasSet& b);

AliasSet project(const AliasSet& a, const std::set<VarId>& vars);

/// Throws Error when a variable of `a` is not mapped.
AliasSet rename(const AliasSet& a, const std::map<VarId, VarId>& mapping);

/// Transitive combination of sharing through common variables.
AliasSet altclosure(const AliasSet& a, const TypeEnv& env);
/// Drops pairs covered by another pair of the set.
AliasSet reduce(const AliasSet& a, const TypeEnv& env);
/// Same, for `a` extending the already reduced `base`: only pairs over the
/// variables of the new pairs are compared.
AliasSet reduce(const AliasSet& base, const AliasSet& a, const TypeEnv& env);

/// Closure of `closed` plus `added`, where `closed` is already closed.
AliasSet altclosure(const AliasSet& closed, const AliasSet& added, const TypeEnv& env);

/// True when `general` denotes every position `specific` denotes.
bool subsumes(const Datastructure& general, const Datastructure& specific, const TypeEnv& env);

/// True when some position of `a` may be an ancestor of, or equal to, some
/// position of `b`; both paths are taken from the same root of type `root`.
bool may_reach(const SelectorPath& a, const SelectorPath& b, const TypeExpr& root,
               const TypeTable& types);

/// Does the pattern denote the concrete field path `concrete`?
bool denotes(const SelectorPath& pattern, const SelectorPath& concrete, const TypeExpr& root,
             const TypeTable& types);

/// Pairs whose either side selects a primitive or enum-like type, and
/// precise self pairs, carry no information and are dropped.
bool informative(const AliasPair& p, const TypeEnv& env);

// ---------------------------------------------------------------------------
// Text form: alias(X^(b,1), X1), X^([|],2).T(list(int)), sets in braces.

using VarNamer = std::function<std::string(VarId)>;
using VarResolver = std::function<std::optional<VarId>(const std::string&)>;

std::string to_string(const SelectorPath& path);
std::string to_string(const Datastructure& d, const VarNamer& name);
std::string to_string(const AliasPair& p, const VarNamer& name);
/// Sorted, deterministic; `top` for Top.
std::string to_string(const AliasSet& a, const VarNamer& name);

Datastructure parse_datastructure(std::string_view text, const VarResolver& resolve,
                                  const TypeEnv& env);
AliasSet parse_alias_set(std::string_view text, const VarResolver& resolve, const TypeEnv& env);
/// `{X, X^(b,1)}`
std::set<Datastructure> parse_datastructure_set(std::string_view text, const VarResolver& resolve,
                                                const TypeEnv& env);

}  // namespace ctgc
