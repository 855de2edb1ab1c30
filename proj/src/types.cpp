#include "ctgc/types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ctgc {

bool TypeExpr::is_variable() const {
  return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
}

std::string TypeExpr::str() const {
  std::string out = name;
  if (!args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ", ";
      out += args[i].str();
    }
    out += ')';
  }
  return out;
}

bool operator==(const TypeExpr& a, const TypeExpr& b) {
  return a.name == b.name && a.args == b.args;
}

bool operator!=(const TypeExpr& a, const TypeExpr& b) { return !(a == b); }

bool operator<(const TypeExpr& a, const TypeExpr& b) {
  if (a.name != b.name) return a.name < b.name;
  return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(), b.args.end());
}

TypeExpr substitute(const TypeExpr& t, const TypeSubst& subst) {
  if (t.is_variable()) {
    auto it = subst.find(t.name);
    return it == subst.end() ? t : it->second;
  }
  TypeExpr out{t.name};
  out.args.reserve(t.args.size());
  for (const auto& a : t.args) out.args.push_back(substitute(a, subst));
  return out;
}

bool match_type(const TypeExpr& pattern, const TypeExpr& actual, TypeSubst& subst) {
  if (pattern.is_variable()) {
    auto [it, inserted] = subst.emplace(pattern.name, actual);
    if (inserted) return true;
    // An unresolved variable on the actual side is compatible with anything.
    if (actual.is_variable()) return true;
    if (it->second.is_variable()) {
      it->second = actual;
      return true;
    }
    return it->second == actual;
  }
  if (actual.is_variable()) return true;
  if (pattern.name != actual.name || pattern.args.size() != actual.args.size()) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i)
    if (!match_type(pattern.args[i], actual.args[i], subst)) return false;
  return true;
}

bool is_primitive_type_name(std::string_view name) {
  return name == "int" || name == "char" || name == "string" || name == "float";
}

bool TypeDef::enum_like() const {
  return std::all_of(alternatives.begin(), alternatives.end(),
                     [](const Alternative& a) { return a.args.empty(); });
}

const Alternative* TypeDef::find(std::string_view functor) const {
  for (const auto& a : alternatives)
    if (a.functor == functor) return &a;
  return nullptr;
}

std::size_t TypeDef::index_of(std::string_view functor) const {
  for (std::size_t i = 0; i < alternatives.size(); ++i)
    if (alternatives[i].functor == functor) return i;
  return std::string::npos;
}

std::size_t TypeDef::constant_ordinal(std::string_view functor) const {
  std::size_t ord = 0;
  for (const auto& a : alternatives) {
    if (!a.args.empty()) continue;
    if (a.functor == functor) return ord;
    ++ord;
  }
  return std::string::npos;
}

TypeExpr TypeDef::self_type() const {
  TypeExpr t{name};
  for (const auto& p : params) t.args.emplace_back(p);
  return t;
}

bool operator==(const TypeDef& a, const TypeDef& b) {
  if (a.name != b.name || a.params != b.params ||
      a.alternatives.size() != b.alternatives.size())
    return false;
  for (std::size_t i = 0; i < a.alternatives.size(); ++i) {
    if (a.alternatives[i].functor != b.alternatives[i].functor ||
        a.alternatives[i].args != b.alternatives[i].args)
      return false;
  }
  return true;
}

void TypeTable::add(const TypeDef& def) {
  if (is_primitive_type_name(def.name))
    throw TypeError("cannot redefine primitive type '" + def.name + "'");
  auto it = defs_.find(def.name);
  if (it != defs_.end()) {
    if (it->second == def) return;
    throw TypeError("conflicting definitions of type '" + def.name + "'");
  }
  for (std::size_t i = 0; i < def.alternatives.size(); ++i)
    for (std::size_t j = i + 1; j < def.alternatives.size(); ++j)
      if (def.alternatives[i].functor == def.alternatives[j].functor)
        throw TypeError("duplicate functor '" + def.alternatives[i].functor + "' in type '" +
                        def.name + "'");
  defs_.emplace(def.name, def);
}

const TypeDef* TypeTable::find(std::string_view name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

bool TypeTable::is_primitive(const TypeExpr& t) const { return is_primitive_type_name(t.name); }

bool TypeTable::is_enum_like(const TypeExpr& t) const {
  const TypeDef* def = find(t.name);
  return def != nullptr && def->enum_like();
}

bool TypeTable::has_heap_cells(const TypeExpr& t) const {
  if (t.is_variable()) return true;
  if (is_primitive(t)) return false;
  return !is_enum_like(t);
}

namespace {

bool mentions_variable(const TypeExpr& t) {
  if (t.is_variable()) return true;
  return std::any_of(t.args.begin(), t.args.end(), mentions_variable);
}

}  // namespace

bool TypeTable::reaches(const TypeExpr& from, const TypeExpr& to) const {
  if (from == to || mentions_variable(from) || to.is_variable()) return true;
  auto key = std::make_pair(from.str(), to.str());
  auto hit = reach_cache_.find(key);
  if (hit != reach_cache_.end()) return hit->second;
  std::set<std::string> seen{key.first};
  std::vector<TypeExpr> todo{from};
  bool found = false;
  while (!todo.empty() && !found) {
    TypeExpr t = std::move(todo.back());
    todo.pop_back();
    const TypeDef* def = find(t.name);
    if (def == nullptr) continue;
    for (const auto& alt : def->alternatives) {
      auto args = functor_arg_types(t, alt.functor);
      for (const auto& a : *args) {
        if (a == to || mentions_variable(a)) found = true;
        if (seen.insert(a.str()).second) todo.push_back(a);
      }
    }
  }
  reach_cache_[key] = found;
  return found;
}

std::optional<std::vector<TypeExpr>> TypeTable::functor_arg_types(const TypeExpr& type,
                                                                  std::string_view functor) const {
  const TypeDef* def = find(type.name);
  if (def == nullptr) return std::nullopt;
  const Alternative* alt = def->find(functor);
  if (alt == nullptr) return std::nullopt;
  TypeSubst subst;
  for (std::size_t i = 0; i < def->params.size() && i < type.args.size(); ++i)
    subst.emplace(def->params[i], type.args[i]);
  std::vector<TypeExpr> out;
  out.reserve(alt->args.size());
  for (const auto& a : alt->args) out.push_back(substitute(a, subst));
  return out;
}

std::optional<std::size_t> TypeTable::cell_size(std::string_view functor,
                                                const TypeExpr& type) const {
  if (is_primitive(type)) return std::nullopt;
  const TypeDef* def = find(type.name);
  if (def == nullptr) throw TypeError("unknown type '" + type.str() + "'");
  const Alternative* alt = def->find(functor);
  if (alt == nullptr)
    throw TypeError("unknown functor '" + std::string(functor) + "' of type '" + type.str() + "'");
  if (alt->args.empty()) return std::nullopt;
  return alt->args.size();
}

std::vector<const TypeDef*> TypeTable::types_with_functor(std::string_view functor,
                                                          std::size_t arity) const {
  std::vector<const TypeDef*> out;
  for (const auto& [name, def] : defs_) {
    const Alternative* alt = def.find(functor);
    if (alt != nullptr && alt->arity() == arity) out.push_back(&def);
  }
  return out;
}

void TypeTable::check_wellformed(const TypeExpr& t, const std::vector<std::string>& params) const {
  if (t.is_variable()) {
    if (std::find(params.begin(), params.end(), t.name) == params.end())
      throw TypeError("unbound type variable '" + t.name + "'");
    return;
  }
  if (is_primitive(t)) {
    if (!t.args.empty()) throw TypeError("primitive type '" + t.name + "' takes no arguments");
    return;
  }
  const TypeDef* def = find(t.name);
  if (def == nullptr) throw TypeError("unknown type '" + t.name + "'");
  if (def->params.size() != t.args.size())
    throw TypeError("type '" + t.name + "' expects " + std::to_string(def->params.size()) +
                    " argument(s)");
  for (const auto& a : t.args) check_wellformed(a, params);
}

}  // namespace ctgc
