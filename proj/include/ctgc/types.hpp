#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctgc {

/// Base class of every error raised by the toolchain.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class TypeError : public Error {
public:
  using Error::Error;
};

/// A type expression such as `int`, `list(T)` or `list(field1)`.
/// Names starting with an uppercase letter are type variables.
struct TypeExpr {
  std::string name;
  std::vector<TypeExpr> args;

  TypeExpr() = default;
  explicit TypeExpr(std::string n, std::vector<TypeExpr> a = {})
      : name(std::move(n)), args(std::move(a)) {}

  bool is_variable() const;
  std::string str() const;
};

bool operator==(const TypeExpr& a, const TypeExpr& b);
bool operator!=(const TypeExpr& a, const TypeExpr& b);
bool operator<(const TypeExpr& a, const TypeExpr& b);

using TypeSubst = std::map<std::string, TypeExpr>;

TypeExpr substitute(const TypeExpr& t, const TypeSubst& subst);

/// One-sided matching: binds variables of `pattern` so it equals `actual`.
/// Variables already bound in `subst` must agree. Returns false on clash.
bool match_type(const TypeExpr& pattern, const TypeExpr& actual, TypeSubst& subst);

/// int, char, string and float are single machine words with no heap cell.
bool is_primitive_type_name(std::string_view name);

struct Alternative {
  std::string functor;
  std::vector<TypeExpr> args;

  std::size_t arity() const { return args.size(); }
};

struct TypeDef {
  std::string name;
  std::vector<std::string> params;
  std::vector<Alternative> alternatives;

  /// Every alternative is a constant: represented as a plain integer.
  bool enum_like() const;
  const Alternative* find(std::string_view functor) const;
  /// Index of the alternative in declaration order, or npos.
  std::size_t index_of(std::string_view functor) const;
  /// Ordinal among the zero-arity alternatives (the runtime integer value).
  std::size_t constant_ordinal(std::string_view functor) const;
  TypeExpr self_type() const;
};

/// The set of type definitions visible to a module.
class TypeTable {
public:
  /// Adds a definition. An identical redefinition is accepted; a
  /// conflicting one throws TypeError.
  void add(const TypeDef& def);

  const TypeDef* find(std::string_view name) const;
  const std::map<std::string, TypeDef, std::less<>>& all() const { return defs_; }

  bool is_primitive(const TypeExpr& t) const;
  bool is_enum_like(const TypeExpr& t) const;
  /// True when values of `t` may live in heap cells (and hence be shared).
  /// Unresolved type variables count as heap types.
  bool has_heap_cells(const TypeExpr& t) const;

  /// True when a value of type `to` may occur at or below a value of type
  /// `from`. A type variable on either side may stand for anything.
  bool reaches(const TypeExpr& from, const TypeExpr& to) const;

  /// Argument types of `functor` as an alternative of the instantiated `type`.
  std::optional<std::vector<TypeExpr>> functor_arg_types(const TypeExpr& type,
                                                         std::string_view functor) const;

  /// Words in the heap cell of `functor` of `type`, or nullopt when the
  /// value is a constant or a primitive. Throws TypeError for an unknown functor.
  std::optional<std::size_t> cell_size(std::string_view functor, const TypeExpr& type) const;

  /// Type definitions declaring an alternative `functor` of the given arity.
  std::vector<const TypeDef*> types_with_functor(std::string_view functor,
                                                 std::size_t arity) const;

  /// Throws TypeError if `t` mentions an undeclared type or wrong arity.
  /// Type variables are accepted only if listed in `params`.
  void check_wellformed(const TypeExpr& t, const std::vector<std::string>& params) const;

private:
  std::map<std::string, TypeDef, std::less<>> defs_;
  mutable std::map<std::pair<std::string, std::string>, bool> reach_cache_;
};

bool operator==(const TypeDef& a, const TypeDef& b);

}  // namespace ctgc
