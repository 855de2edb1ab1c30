#include "ctgc/alias.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <tuple>
#include <unordered_map>

namespace ctgc {

namespace {

// Paths longer than this are cut to a type selector; guards against
// type definitions whose instances grow without revisiting a type.
constexpr std::size_t kMaxPathLength = 24;

std::size_t field_prefix_length(const SelectorPath& p) {
  std::size_t n = 0;
  while (n < p.size() && !p[n].is_type()) ++n;
  return n;
}

const Selector* type_tail(const SelectorPath& p) {
  std::size_t n = field_prefix_length(p);
  return n < p.size() ? &p[n] : nullptr;
}

bool is_field_prefix(const SelectorPath& a, std::size_t alen, const SelectorPath& b,
                     std::size_t blen) {
  if (alen > blen) return false;
  for (std::size_t i = 0; i < alen; ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

TypeExpr step(const TypeExpr& cur, const Selector& sel, const TypeTable& types) {
  if (sel.is_type()) {
    if (!types.reaches(cur, sel.type))
      throw TypeError("type " + sel.type.str() + " does not occur in " + cur.str());
    return sel.type;
  }
  auto args = types.functor_arg_types(cur, sel.functor);
  if (!args || args->size() != sel.arity || sel.index == 0 || sel.index > args->size())
    throw TypeError("selector (" + sel.functor + "," + std::to_string(sel.index) +
                    ") does not apply to type " + cur.str());
  return (*args)[sel.index - 1];
}

/// Types selected at the root, then after each field selector of the prefix.
std::vector<TypeExpr> types_along(const TypeExpr& root, const SelectorPath& p, std::size_t flen,
                                  const TypeTable& types) {
  std::vector<TypeExpr> out{root};
  TypeExpr cur = root;
  for (std::size_t i = 0; i < flen; ++i) {
    cur = step(cur, p[i], types);
    out.push_back(cur);
  }
  return out;
}

std::optional<Datastructure> try_normalize(const Datastructure& d, const TypeEnv& env) {
  try {
    return normalize_path(d, env);
  } catch (const TypeError&) {
    return std::nullopt;
  }
}

SelectorPath concat(const SelectorPath& a, const SelectorPath& b, std::size_t from,
                    std::size_t to) {
  SelectorPath out = a;
  out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(from),
             b.begin() + static_cast<std::ptrdiff_t>(to));
  return out;
}

}  // namespace

Selector Selector::field(std::string functor, std::size_t arity, std::size_t index) {
  Selector s;
  s.kind = Kind::field;
  s.functor = std::move(functor);
  s.arity = arity;
  s.index = index;
  return s;
}

Selector Selector::of_type(TypeExpr t) {
  Selector s;
  s.kind = Kind::type;
  s.type = std::move(t);
  return s;
}

bool operator==(const Selector& a, const Selector& b) {
  if (a.kind != b.kind) return false;
  if (a.is_type()) return a.type == b.type;
  return a.functor == b.functor && a.arity == b.arity && a.index == b.index;
}

bool operator<(const Selector& a, const Selector& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.is_type()) return a.type < b.type;
  return std::tie(a.functor, a.arity, a.index) < std::tie(b.functor, b.arity, b.index);
}

bool operator==(const Datastructure& a, const Datastructure& b) {
  return a.var == b.var && a.path == b.path;
}

bool operator<(const Datastructure& a, const Datastructure& b) {
  if (a.var != b.var) return a.var < b.var;
  return std::lexicographical_compare(a.path.begin(), a.path.end(), b.path.begin(), b.path.end());
}

AliasPair::AliasPair(Datastructure a, Datastructure b) {
  if (b < a) std::swap(a, b);
  first = std::move(a);
  second = std::move(b);
}

bool operator==(const AliasPair& a, const AliasPair& b) {
  return a.first == b.first && a.second == b.second;
}

bool operator<(const AliasPair& a, const AliasPair& b) {
  if (!(a.first == b.first)) return a.first < b.first;
  return a.second < b.second;
}

AliasSet AliasSet::top() {
  AliasSet s;
  s.top_ = true;
  return s;
}

bool AliasSet::insert(AliasPair p) {
  if (top_) return false;
  return pairs_.insert(std::move(p)).second;
}

const TypeExpr& TypeEnv::type_of(VarId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= var_types.size())
    throw Error("variable #" + std::to_string(v) + " has no type");
  return var_types[static_cast<std::size_t>(v)];
}

TypeExpr selected_type(const TypeExpr& root, const SelectorPath& path, const TypeTable& types) {
  TypeExpr cur = root;
  for (const auto& sel : path) cur = step(cur, sel, types);
  return cur;
}

TypeExpr selected_type(const Datastructure& d, const TypeEnv& env) {
  return selected_type(env.type_of(d.var), d.path, *env.types);
}

Datastructure normalize_path(const Datastructure& d, const TypeEnv& env) {
  Datastructure out{d.var, {}};
  TypeExpr cur = env.type_of(d.var);
  std::vector<TypeExpr> seen;
  bool below_type = false;
  for (const auto& sel : d.path) {
    TypeExpr next = step(cur, sel, *env.types);
    if (below_type || sel.is_type()) {
      below_type = true;
      cur = std::move(next);
      continue;
    }
    if (std::find(seen.begin(), seen.end(), next) != seen.end() ||
        out.path.size() + 1 >= kMaxPathLength) {
      out.path.push_back(Selector::of_type(next));
      return out;
    }
    seen.push_back(next);
    out.path.push_back(sel);
    cur = std::move(next);
  }
  if (below_type) out.path.push_back(Selector::of_type(cur));
  return out;
}

bool informative(const AliasPair& p, const TypeEnv& env) {
  if (p.first == p.second && type_tail(p.first.path) == nullptr) return false;
  for (const Datastructure* d : {&p.first, &p.second}) {
    TypeExpr t = selected_type(*d, env);
    if (!env.types->has_heap_cells(t)) return false;
  }
  return true;
}

AliasSet widen_alias(const AliasSet& a, const TypeEnv& env) {
  if (a.is_top()) return a;
  auto widen = [&](const Datastructure& d) {
    if (d.path.empty()) return d;
    return Datastructure{d.var, {Selector::of_type(selected_type(d, env))}};
  };
  AliasSet out;
  for (const auto& p : a.pairs()) out.insert(AliasPair(widen(p.first), widen(p.second)));
  return out;
}

AliasSet maybe_widen(const AliasSet& a, std::optional<std::size_t> threshold,
                     const TypeEnv& env) {
  if (a.is_top() || !threshold || a.size() <= *threshold) return a;
  return widen_alias(a, env);
}

bool denotes(const SelectorPath& pattern, const SelectorPath& concrete, const TypeExpr& root,
             const TypeTable& types) {
  std::size_t flen = field_prefix_length(pattern);
  const Selector* tail = type_tail(pattern);
  if (tail == nullptr) return pattern == concrete;
  if (!is_field_prefix(pattern, flen, concrete, concrete.size())) return false;
  auto along = types_along(root, concrete, concrete.size(), types);
  for (std::size_t k = flen; k < along.size(); ++k)
    if (along[k] == tail->type) return true;
  return false;
}

bool subsumes(const Datastructure& general, const Datastructure& specific, const TypeEnv& env) {
  if (general.var != specific.var) return false;
  const Selector* gtail = type_tail(general.path);
  if (gtail == nullptr) return general.path == specific.path;
  std::size_t gf = field_prefix_length(general.path);
  std::size_t sf = field_prefix_length(specific.path);
  if (!is_field_prefix(general.path, gf, specific.path, sf)) return false;
  const Selector* stail = type_tail(specific.path);
  if (stail != nullptr && stail->type == gtail->type) return true;
  auto along = types_along(env.type_of(specific.var), specific.path, sf, *env.types);
  for (std::size_t k = gf; k < along.size(); ++k)
    if (along[k] == gtail->type) return true;
  return false;
}

bool may_reach(const SelectorPath& a, const SelectorPath& b, const TypeExpr& root,
               const TypeTable& types) {
  std::size_t af = field_prefix_length(a);
  std::size_t bf = field_prefix_length(b);
  const Selector* at = type_tail(a);
  const Selector* bt = type_tail(b);
  if (is_field_prefix(a, af, b, bf)) {
    if (at == nullptr) return true;
    if (bt != nullptr) return true;
    auto along = types_along(root, b, bf, types);
    for (std::size_t k = af; k < along.size(); ++k)
      if (along[k] == at->type) return true;
    return false;
  }
  if (is_field_prefix(b, bf, a, af)) return bt != nullptr;
  return false;
}

namespace {

bool pair_covered(const AliasPair& p, const AliasPair& q, const TypeEnv& env) {
  return (subsumes(q.first, p.first, env) && subsumes(q.second, p.second, env)) ||
         (subsumes(q.second, p.first, env) && subsumes(q.first, p.second, env));
}

using VarPair = std::pair<VarId, VarId>;

VarPair vars_of(const AliasPair& p) { return std::minmax(p.first.var, p.second.var); }

// A pair can only be covered by a pair over the same two variables.
std::map<VarPair, std::vector<const AliasPair*>> by_vars(const AliasSet& a) {
  std::map<VarPair, std::vector<const AliasPair*>> out;
  for (const auto& p : a.pairs()) out[vars_of(p)].push_back(&p);
  return out;
}

}  // namespace

bool alias_leq(const AliasSet& a, const AliasSet& b, const TypeEnv& env) {
  if (b.is_top()) return true;
  if (a.is_top()) return false;
  auto groups = by_vars(b);
  for (const auto& p : a.pairs()) {
    if (b.contains(p)) continue;
    auto g = groups.find(vars_of(p));
    if (g == groups.end()) return false;
    bool covered = false;
    // Equality at two positions implies equality of their common extensions,
    // so a pair is also covered by any pair of its common-suffix-stripped form.
    AliasPair cur = p;
    while (!covered) {
      for (const AliasPair* q : g->second) {
        if (pair_covered(cur, *q, env)) {
          covered = true;
          break;
        }
      }
      if (covered) break;
      auto& x = cur.first.path;
      auto& y = cur.second.path;
      if (x.empty() || y.empty() || x.back().is_type() || y.back().is_type() ||
          !(x.back() == y.back()))
        break;
      Datastructure f{cur.first.var, SelectorPath(x.begin(), x.end() - 1)};
      Datastructure s{cur.second.var, SelectorPath(y.begin(), y.end() - 1)};
      cur = AliasPair(std::move(f), std::move(s));
    }
    if (!covered) return false;
  }
  return true;
}

namespace {

bool redundant(const AliasPair& p, const std::vector<const AliasPair*>& group, const TypeEnv& env) {
  for (const AliasPair* qp : group) {
    const AliasPair& q = *qp;
    if (q == p || !pair_covered(p, q, env)) continue;
    if (!pair_covered(q, p, env) || q < p) return true;
  }
  return false;
}

}  // namespace

AliasSet reduce(const AliasSet& a, const TypeEnv& env) {
  if (a.is_top()) return a;
  AliasSet out;
  auto groups = by_vars(a);
  for (const auto& p : a.pairs())
    if (!redundant(p, groups[vars_of(p)], env)) out.insert(p);
  return out;
}

AliasSet reduce(const AliasSet& base, const AliasSet& a, const TypeEnv& env) {
  if (a.is_top() || base.is_top()) return reduce(a, env);
  std::set<VarPair> touched;
  for (const auto& p : a.pairs())
    if (!base.contains(p)) touched.insert(vars_of(p));
  if (touched.empty()) return a;
  std::map<VarPair, std::vector<const AliasPair*>> groups;
  for (const auto& p : a.pairs())
    if (touched.count(vars_of(p))) groups[vars_of(p)].push_back(&p);
  std::vector<const AliasPair*> drop;
  for (const auto& [vars, group] : groups)
    for (const AliasPair* p : group)
      if (redundant(*p, group, env)) drop.push_back(p);
  if (drop.empty()) return a;
  AliasSet out = a;
  for (const AliasPair* p : drop) out.erase(*p);
  return out;
}

AliasSet alias_join(const AliasSet& a, const AliasSet& b) {
  if (a.is_top() || b.is_top()) return AliasSet::top();
  AliasSet out = a;
  for (const auto& p : b.pairs()) out.insert(p);
  return out;
}

AliasSet project(const AliasSet& a, const std::set<VarId>& vars) {
  if (a.is_top()) return a;
  AliasSet out;
  for (const auto& p : a.pairs())
    if (vars.count(p.first.var) && vars.count(p.second.var)) out.insert(p);
  return out;
}

AliasSet rename(const AliasSet& a, const std::map<VarId, VarId>& mapping) {
  if (a.is_top()) return a;
  auto map_var = [&](VarId v) {
    auto it = mapping.find(v);
    if (it == mapping.end()) throw Error("rename: unmapped variable #" + std::to_string(v));
    return it->second;
  };
  AliasSet out;
  for (const auto& p : a.pairs())
    out.insert(AliasPair(Datastructure{map_var(p.first.var), p.first.path},
                         Datastructure{map_var(p.second.var), p.second.path}));
  return out;
}

namespace {

// Given pairs (d1, P) and (Q, d3) where P and Q are paths on the same
// variable, derive the sharing between d1 and d3 that follows when the
// positions of P and Q nest.
void derive(const Datastructure& d1, const SelectorPath& p, const SelectorPath& q,
            const Datastructure& d3, const TypeEnv& env, VarId y,
            std::vector<AliasPair>& out) {
  std::size_t pf = field_prefix_length(p);
  std::size_t qf = field_prefix_length(q);
  const Selector* pt = type_tail(p);
  const Selector* qt = type_tail(q);
  const TypeExpr& ytype = env.type_of(y);

  auto emit = [&](Datastructure a, Datastructure b) {
    auto na = try_normalize(a, env);
    auto nb = try_normalize(b, env);
    if (na && nb) out.emplace_back(std::move(*na), std::move(*nb));
  };
  auto extended_by_type = [&](const Datastructure& d, const SelectorPath& other) {
    Datastructure e = d;
    e.path.push_back(Selector::of_type(selected_type(ytype, other, *env.types)));
    return e;
  };

  const bool p_prefix_q = is_field_prefix(p, pf, q, qf);
  const bool q_prefix_p = is_field_prefix(q, qf, p, pf);

  // A position of Q lies at or below a position of P: d1 extended reaches d3.
  if (p_prefix_q) {
    if (pt == nullptr) {
      Datastructure e{d1.var, concat(d1.path, q, pf, q.size())};
      emit(std::move(e), d3);
    } else {
      emit(extended_by_type(d1, q), d3);
    }
  } else if (q_prefix_p && qt != nullptr) {
    emit(extended_by_type(d1, q), d3);
  }

  // A position of P lies at or below a position of Q: d3 extended reaches d1.
  if (q_prefix_p) {
    if (qt == nullptr) {
      Datastructure e{d3.var, concat(d3.path, p, qf, p.size())};
      emit(d1, std::move(e));
    } else {
      emit(d1, extended_by_type(d3, p));
    }
  } else if (p_prefix_q && pt != nullptr) {
    emit(d1, extended_by_type(d3, p));
  }
}

}  // namespace

AliasSet altclosure(const AliasSet& a, const TypeEnv& env) { return altclosure(AliasSet{}, a, env); }

AliasSet altclosure(const AliasSet& closed, const AliasSet& a, const TypeEnv& env) {
  if (closed.is_top()) return closed;
  if (a.is_top()) return a;
  if (std::all_of(a.pairs().begin(), a.pairs().end(), [&](const AliasPair& p) { return closed.contains(p); }))
    return closed;
  AliasSet result = closed;
  std::deque<AliasPair> work;
  std::unordered_map<VarId, std::vector<AliasPair>> by_var;
  std::map<VarPair, std::vector<AliasPair>> by_pair;

  auto index = [&](const AliasPair& p) {
    by_var[p.first.var].push_back(p);
    if (p.second.var != p.first.var) by_var[p.second.var].push_back(p);
    by_pair[vars_of(p)].push_back(p);
  };
  auto add = [&](AliasPair p) {
    if (result.contains(p) || !informative(p, env)) return;
    for (const auto& q : by_pair[vars_of(p)])
      if (pair_covered(p, q, env)) return;
    result.insert(p);
    index(p);
    work.push_back(std::move(p));
  };
  for (const auto& p : closed.pairs()) index(p);
  for (const auto& p : a.pairs()) {
    // Keep the input pairs even if uninformative so the result is a superset.
    if (result.insert(p)) {
      index(p);
      work.push_back(p);
    }
  }

  std::vector<AliasPair> derived;
  while (!work.empty()) {
    AliasPair p = std::move(work.front());
    work.pop_front();
    for (int s = 0; s < 2; ++s) {
      const Datastructure& mine = s == 0 ? p.first : p.second;
      const Datastructure& other = s == 0 ? p.second : p.first;
      if (s == 1 && p.first.var == p.second.var && p.first == p.second) break;
      VarId y = mine.var;
      auto& bucket = by_var[y];
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        AliasPair q = bucket[i];
        for (int t = 0; t < 2; ++t) {
          const Datastructure& qmine = t == 0 ? q.first : q.second;
          const Datastructure& qother = t == 0 ? q.second : q.first;
          if (qmine.var != y) continue;
          derived.clear();
          derive(other, mine.path, qmine.path, qother, env, y, derived);
          for (auto& d : derived) add(std::move(d));
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Text form

std::string to_string(const SelectorPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    const auto& s = path[i];
    if (s.is_type())
      out += "T(" + s.type.str() + ")";
    else
      out += "(" + s.functor + "," + std::to_string(s.index) + ")";
  }
  return out;
}

std::string to_string(const Datastructure& d, const VarNamer& name) {
  std::string out = name(d.var);
  if (!d.path.empty()) out += "^" + to_string(d.path);
  return out;
}

std::string to_string(const AliasPair& p, const VarNamer& name) {
  std::string a = to_string(p.first, name);
  std::string b = to_string(p.second, name);
  if (b < a) std::swap(a, b);
  return "alias(" + a + ", " + b + ")";
}

std::string to_string(const AliasSet& a, const VarNamer& name) {
  if (a.is_top()) return "top";
  std::vector<std::string> items;
  items.reserve(a.size());
  for (const auto& p : a.pairs()) items.push_back(to_string(p, name));
  std::sort(items.begin(), items.end());
  std::string out = "{";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "}";
}

namespace {

class AliasTextParser {
public:
  AliasTextParser(std::string_view text, const VarResolver& resolve, const TypeEnv& env)
      : text_(text), resolve_(resolve), env_(env) {}

  AliasSet parse_set() {
    skip_ws();
    if (consume_word("top")) {
      expect_end();
      return AliasSet::top();
    }
    AliasSet out;
    expect('{');
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      expect_end();
      return out;
    }
    for (;;) {
      skip_ws();
      if (!consume_word("alias")) fail("expected 'alias'");
      expect('(');
      Datastructure a = parse_ds();
      expect(',');
      Datastructure b = parse_ds();
      expect(')');
      out.insert(AliasPair(std::move(a), std::move(b)));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    expect_end();
    return out;
  }

  std::set<Datastructure> parse_ds_set() {
    std::set<Datastructure> out;
    expect('{');
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      expect_end();
      return out;
    }
    for (;;) {
      out.insert(parse_ds());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    expect_end();
    return out;
  }

  Datastructure parse_ds() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a variable name");
    std::string name(text_.substr(start, pos_ - start));
    auto var = resolve_(name);
    if (!var) fail("unknown variable '" + name + "'");
    Datastructure d{*var, {}};
    skip_ws();
    if (peek() != '^') return d;
    ++pos_;
    TypeExpr cur = env_.type_of(d.var);
    for (;;) {
      skip_ws();
      if (peek() == 'T' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '(') {
        pos_ += 2;
        TypeExpr t = parse_type();
        expect(')');
        d.path.push_back(Selector::of_type(t));
        cur = t;
      } else {
        expect('(');
        skip_ws();
        std::size_t fs = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',') ++pos_;
        std::string functor(text_.substr(fs, pos_ - fs));
        while (!functor.empty() && std::isspace(static_cast<unsigned char>(functor.back())))
          functor.pop_back();
        expect(',');
        std::size_t index = parse_uint();
        expect(')');
        auto args = env_.types->functor_arg_types(cur, functor);
        if (!args) fail("functor '" + functor + "' does not belong to type " + cur.str());
        if (index == 0 || index > args->size()) fail("argument index out of range");
        d.path.push_back(Selector::field(functor, args->size(), index));
        cur = (*args)[index - 1];
      }
      skip_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return d;
  }

private:
  TypeExpr parse_type() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a type name");
    TypeExpr t{std::string(text_.substr(start, pos_ - start))};
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      for (;;) {
        t.args.push_back(parse_type());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
    }
    return t;
  }

  std::size_t parse_uint() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    return std::stoul(std::string(text_.substr(start, pos_ - start)));
  }

  bool consume_word(std::string_view w) {
    if (text_.substr(pos_, w.size()) == w) {
      pos_ += w.size();
      return true;
    }
    return false;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("alias text at offset " + std::to_string(pos_) + ": " + msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  const VarResolver& resolve_;
  const TypeEnv& env_;
};

}  // namespace

Datastructure parse_datastructure(std::string_view text, const VarResolver& resolve,
                                  const TypeEnv& env) {
  AliasTextParser p(text, resolve, env);
  return p.parse_ds();
}

AliasSet parse_alias_set(std::string_view text, const VarResolver& resolve, const TypeEnv& env) {
  AliasTextParser p(text, resolve, env);
  return p.parse_set();
}

std::set<Datastructure> parse_datastructure_set(std::string_view text, const VarResolver& resolve,
                                                const TypeEnv& env) {
  AliasTextParser p(text, resolve, env);
  return p.parse_ds_set();
}

}  // namespace ctgc
