#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace ctgc;
using namespace ctgc::test;

namespace {

const char* kTypes =
    ":- module t.\n"
    ":- type tree ---> e ; two(int, tree, tree) ; three(int, int, tree, tree, tree).\n"
    ":- type example ---> a(int, dir) ; b(example).\n"
    ":- type dir ---> north ; south.\n"
    ":- type pair ---> p(tree, tree).\n"
    ":- type box ---> box(pair, tree).\n"
    ":- type list(T) ---> [] ; [T | list(T)].\n";

// ---------------------------------------------------------------------------
// Random alias sets

struct Gen {
  Module m = parse_module(kTypes);
  TypeEnv env{&m.type_table,
              {TypeExpr("tree"), TypeExpr("tree"), TypeExpr("example"), TypeExpr("pair"),
               TypeExpr("box"), TypeExpr("list", {TypeExpr("tree")})}};
  std::mt19937_64 rng;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  Datastructure datastructure() {
    Datastructure d;
    d.var = static_cast<VarId>(pick(env.var_types.size()));
    TypeExpr t = env.type_of(d.var);
    std::size_t depth = pick(4);
    for (std::size_t i = 0; i < depth; ++i) {
      const TypeDef* def = m.type_table.find(t.name);
      std::vector<const Alternative*> alts;
      for (const auto& a : def->alternatives)
        if (a.arity() > 0) alts.push_back(&a);
      if (alts.empty()) break;
      const Alternative* a = alts[pick(alts.size())];
      std::size_t idx = pick(a->arity()) + 1;
      auto args = m.type_table.functor_arg_types(t, a->functor);
      TypeExpr next = (*args)[idx - 1];
      if (!m.type_table.has_heap_cells(next)) break;
      d.path.push_back(Selector::field(a->functor, a->arity(), idx));
      t = next;
    }
    if (pick(5) == 0) {
      d.path.push_back(Selector::of_type(t));
    }
    return normalize_path(d, env);
  }

  AliasSet set(std::size_t max_pairs = 6) {
    AliasSet a;
    std::size_t n = pick(max_pairs + 1);
    for (std::size_t i = 0; i < n; ++i) {
      AliasPair p(datastructure(), datastructure());
      if (informative(p, env)) a.insert(p);
    }
    return a;
  }

  // Only pairs whose two sides select the same type, as programs produce.
  AliasSet typed_set(std::size_t max_pairs) {
    AliasSet a;
    std::size_t n = pick(max_pairs + 1);
    for (std::size_t tries = 0; a.size() < n && tries < 200; ++tries) {
      Datastructure x = datastructure(), y = datastructure();
      if (!(selected_type(env.type_of(x.var), x.path, *env.types) ==
            selected_type(env.type_of(y.var), y.path, *env.types)))
        continue;
      AliasPair p(std::move(x), std::move(y));
      if (informative(p, env)) a.insert(p);
    }
    return a;
  }
};

std::string text(const AliasSet& a) {
  return to_string(a, [](VarId v) { return "V" + std::to_string(v); });
}

}  // namespace

TEST_CASE("join is associative, commutative and idempotent with identity and absorbing Top") {
  Gen g(1);
  for (int i = 0; i < 300; ++i) {
    AliasSet a = g.set(), b = g.set(), c = g.set();
    CHECK(alias_join(a, b) == alias_join(b, a));
    CHECK(alias_join(alias_join(a, b), c) == alias_join(a, alias_join(b, c)));
    CHECK(alias_join(a, a) == a);
    CHECK(alias_join(a, AliasSet{}) == a);
    CHECK(alias_join(a, AliasSet::top()).is_top());
    CHECK(alias_leq(a, alias_join(a, b), g.env));
    CHECK(alias_leq(b, alias_join(a, b), g.env));
  }
}

TEST_CASE("alias_leq is reflexive and transitive") {
  Gen g(2);
  for (int i = 0; i < 300; ++i) {
    AliasSet a = g.set(), b = g.set();
    AliasSet ab = alias_join(a, b);
    AliasSet w = widen_alias(ab, g.env);
    CHECK(alias_leq(a, a, g.env));
    CHECK(alias_leq(a, ab, g.env));
    CHECK(alias_leq(ab, w, g.env));
    CHECK(alias_leq(a, w, g.env));
  }
}

TEST_CASE("widening is extensive, idempotent, monotone and never adds pairs") {
  Gen g(3);
  for (int i = 0; i < 300; ++i) {
    AliasSet a = g.set(), b = g.set();
    AliasSet w = widen_alias(a, g.env);
    CHECK(alias_leq(a, w, g.env));
    CHECK(widen_alias(w, g.env) == w);
    CHECK(w.size() <= a.size());
    AliasSet ab = alias_join(a, b);
    CHECK(alias_leq(w, widen_alias(ab, g.env), g.env));
  }
}

TEST_CASE("normalize_path is idempotent and never lengthens a path") {
  Gen g(4);
  for (int i = 0; i < 500; ++i) {
    Datastructure d = g.datastructure();
    Datastructure n = normalize_path(d, g.env);
    CHECK(normalize_path(n, g.env) == n);
    CHECK(n.path.size() <= d.path.size() + 1);
    CHECK(selected_type(n, g.env) == selected_type(d, g.env));
  }
}

TEST_CASE("altclosure is extensive and idempotent") {
  Gen g(5);
  for (int i = 0; i < 200; ++i) {
    AliasSet a = g.set(4);
    AliasSet c = altclosure(a, g.env);
    CHECK(alias_leq(a, c, g.env));
    CHECK(altclosure(c, g.env) == c);
  }
}

// Concrete field paths into a value of type `t`, up to `depth` steps.
void positions(const Gen& g, const TypeExpr& t, std::size_t depth, SelectorPath& cur,
               std::vector<SelectorPath>& out) {
  out.push_back(cur);
  if (depth == 0) return;
  const TypeDef* def = g.m.type_table.find(t.name);
  if (def == nullptr) return;
  for (const auto& alt : def->alternatives) {
    auto args = g.m.type_table.functor_arg_types(t, alt.functor);
    for (std::size_t i = 0; i < alt.arity(); ++i) {
      if (!g.m.type_table.has_heap_cells((*args)[i])) continue;
      cur.push_back(Selector::field(alt.functor, alt.arity(), i + 1));
      positions(g, (*args)[i], depth - 1, cur, out);
      cur.pop_back();
    }
  }
}

bool nested(const SelectorPath& a, const SelectorPath& b) {
  const SelectorPath& s = a.size() <= b.size() ? a : b;
  const SelectorPath& l = a.size() <= b.size() ? b : a;
  return std::equal(s.begin(), s.end(), l.begin());
}

std::vector<SelectorPath> positions_of(const Gen& g, VarId v) {
  std::vector<SelectorPath> all;
  SelectorPath cur;
  positions(g, g.env.type_of(v), 3, cur, all);
  return all;
}

// Every pair of concrete positions (up to a bounded depth) that `p` relates
// is either a term and its own subterm, which never share, or related by
// some pair of `a`.
bool concretely_covered(const Gen& g, const AliasPair& p, const AliasSet& a) {
  const TypeTable& tt = g.m.type_table;
  auto den = [&](const Datastructure& d, VarId v, const SelectorPath& pos) {
    return d.var == v && denotes(d.path, pos, g.env.type_of(v), tt);
  };
  VarId x = p.first.var, y = p.second.var;
  auto xs = positions_of(g, x), ys = positions_of(g, y);
  for (const auto& px : xs) {
    if (!den(p.first, x, px)) continue;
    for (const auto& py : ys) {
      if (!den(p.second, y, py)) continue;
      if (x == y && nested(px, py)) continue;
      bool found = false;
      for (const auto& q : a.pairs()) {
        if ((den(q.first, x, px) && den(q.second, y, py)) || (den(q.second, x, px) && den(q.first, y, py))) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

TEST_CASE("closing and reducing step by step agrees with doing it at once") {
  Gen g(8);
  for (int i = 0; i < 1000; ++i) {
    AliasSet base = reduce(altclosure(g.typed_set(4), g.env), g.env);
    AliasSet added = g.typed_set(3);
    AliasSet step = altclosure(base, added, g.env);
    AliasSet whole = altclosure(alias_join(base, added), g.env);
    for (const auto& [from, to] : {std::pair{&whole, &step}, std::pair{&step, &whole}})
      for (const auto& p : from->pairs()) {
        AliasSet one;
        one.insert(p);
        if (alias_leq(one, *to, g.env)) continue;
        INFO(text(one));
        CHECK(concretely_covered(g, p, *to));
      }
    CHECK(reduce(base, step, g.env) == reduce(step, g.env));
  }
}

TEST_CASE("text form round-trips") {
  Gen g(6);
  VarResolver r = [](const std::string& n) -> std::optional<VarId> {
    if (n.size() < 2 || n[0] != 'V') return std::nullopt;
    return std::stoi(n.substr(1));
  };
  for (int i = 0; i < 300; ++i) {
    AliasSet a = g.set();
    CHECK(parse_alias_set(text(a), r, g.env) == a);
  }
}

// ---------------------------------------------------------------------------
// Soundness against a concrete term-graph model
//
// Random straight-line bodies of constructs, deconstructs and assignments are
// executed on a small graph of nodes. Every pair of distinct positions that
// hold the same heap node must be covered by the analysed alias set.

namespace {

struct Node {
  std::string functor;
  std::vector<int> kids;  // -1 for integers
};

struct Concrete {
  std::vector<Node> nodes;
  std::map<std::string, int> vars;
  std::map<std::string, std::string> types;
};

struct Program {
  std::string text;
  Concrete heap;
};

const std::map<std::string, std::vector<std::string>>& functor_args() {
  static const std::map<std::string, std::vector<std::string>> f{
      {"two", {"int", "tree", "tree"}},
      {"three", {"int", "int", "tree", "tree", "tree"}},
      {"p", {"tree", "tree"}},
      {"box", {"pair", "tree"}}};
  return f;
}

Program random_program(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  Program out;
  Concrete& h = out.heap;
  std::vector<std::string> goals;
  int fresh = 0;
  auto var_of = [&](const std::string& type) {
    std::vector<std::string> vs;
    for (const auto& [v, t] : h.types)
      if (t == type) vs.push_back(v);
    return vs;
  };
  auto new_var = [&](const std::string& type, int node) {
    std::string v = "V" + std::to_string(++fresh);
    h.vars[v] = node;
    h.types[v] = type;
    return v;
  };
  h.nodes.push_back({"e", {}});
  goals.push_back(new_var("tree", 0) + " <= e");

  int steps = 6 + static_cast<int>(pick(8));
  for (int s = 0; s < steps; ++s) {
    std::size_t kind = pick(4);
    if (kind == 0 || kind == 1) {
      static const std::vector<std::string> fs{"two", "three", "p", "box"};
      std::string f = fs[pick(fs.size())];
      const auto& args = functor_args().at(f);
      std::vector<std::string> actual;
      std::vector<int> kids;
      std::set<std::string> used;
      bool ok = true;
      for (const auto& t : args) {
        if (t == "int") {
          actual.push_back(std::to_string(pick(10)));
          kids.push_back(-1);
          continue;
        }
        auto cands = var_of(t);
        if (cands.empty()) {
          ok = false;
          break;
        }
        std::string v = cands[pick(cands.size())];
        if (used.count(v)) {
          // Arguments must be distinct: share through a copy.
          std::string c = new_var(t, h.vars[v]);
          goals.push_back(c + " := " + v);
          v = c;
        }
        used.insert(v);
        actual.push_back(v);
        kids.push_back(h.vars[v]);
      }
      if (!ok) continue;
      h.nodes.push_back({f, kids});
      std::string type = f == "p" ? "pair" : f == "box" ? "box" : "tree";
      std::string x = new_var(type, static_cast<int>(h.nodes.size()) - 1);
      std::string g = x + " <= " + f + "(";
      for (std::size_t i = 0; i < actual.size(); ++i) g += (i ? ", " : "") + actual[i];
      goals.push_back(g + ")");
    } else if (kind == 2) {
      std::vector<std::string> cands;
      for (const auto& [v, n] : h.vars)
        if (!h.nodes[static_cast<std::size_t>(n)].kids.empty()) cands.push_back(v);
      if (cands.empty()) continue;
      std::string x = cands[pick(cands.size())];
      const Node node = h.nodes[static_cast<std::size_t>(h.vars[x])];
      const auto& args = functor_args().at(node.functor);
      std::string g = x + " => " + node.functor + "(";
      for (std::size_t i = 0; i < args.size(); ++i) {
        g += i ? ", " : "";
        if (args[i] == "int")
          g += "_";
        else
          g += new_var(args[i], node.kids[i]);
      }
      goals.push_back(g + ")");
    } else {
      std::vector<std::string> all;
      for (const auto& [v, n] : h.vars) all.push_back(v);
      std::string x = all[pick(all.size())];
      std::string c = new_var(h.types[x], h.vars[x]);
      goals.push_back(c + " := " + x);
    }
  }
  out.text = std::string(kTypes) + ":- pred go(int).\n:- mode go(out) is det.\ngo(R) :-\n";
  for (const auto& g : goals) out.text += "    " + g + ",\n";
  out.text += "    R <= 0.\n";
  return out;
}

struct Position {
  std::string var;
  SelectorPath path;
};

void positions(const Concrete& h, int node, const std::string& var, SelectorPath& path, std::size_t depth,
               std::map<int, std::vector<Position>>& out) {
  const Node& n = h.nodes[static_cast<std::size_t>(node)];
  if (n.kids.empty()) return;  // constants hold no cell
  out[node].push_back({var, path});
  if (depth == 0) return;
  for (std::size_t i = 0; i < n.kids.size(); ++i) {
    if (n.kids[i] < 0) continue;
    path.push_back(Selector::field(n.functor, n.kids.size(), i + 1));
    positions(h, n.kids[i], var, path, depth - 1, out);
    path.pop_back();
  }
}

bool covers(const AliasSet& a, const Procedure& p, const TypeTable& types, VarId xv, const SelectorPath& x,
            VarId yv, const SelectorPath& y) {
  for (std::size_t s = 0; s <= std::min(x.size(), y.size()); ++s) {
    if (!std::equal(x.end() - static_cast<long>(s), x.end(), y.end() - static_cast<long>(s))) break;
    SelectorPath xp(x.begin(), x.end() - static_cast<long>(s));
    SelectorPath yp(y.begin(), y.end() - static_cast<long>(s));
    for (const auto& pr : a.pairs()) {
      for (int flip = 0; flip < 2; ++flip) {
        const Datastructure& d1 = flip ? pr.second : pr.first;
        const Datastructure& d2 = flip ? pr.first : pr.second;
        if (d1.var == xv && d2.var == yv && denotes(d1.path, xp, p.var_type(xv), types) &&
            denotes(d2.path, yp, p.var_type(yv), types))
          return true;
      }
    }
  }
  return false;
}

int check_soundness(std::uint64_t seed, std::optional<std::size_t> widen) {
  Program prog = random_program(seed);
  Analysed an(prog.text, widen);
  const Procedure& p = an.proc("go");
  BodyAnalysis ba = analyse_body(p, an.ctx);
  REQUIRE_FALSE(ba.exit.is_top());
  TypeEnv env = p.type_env(an.m.type_table);
  for (const auto& pr : ba.exit.pairs()) {
    INFO("pair: " << an.names(p, AliasSet(ba.exit)));
    CHECK(selected_type(pr.first, env) == selected_type(pr.second, env));
  }
  std::map<int, std::vector<Position>> at;
  for (const auto& [v, node] : prog.heap.vars) {
    SelectorPath path;
    positions(prog.heap, node, v, path, 3, at);
  }
  int checked = 0;
  for (const auto& [node, ps] : at) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        VarId xv = *p.find_var(ps[i].var);
        VarId yv = *p.find_var(ps[j].var);
        ++checked;
        bool ok = covers(ba.exit, p, an.m.type_table, xv, ps[i].path, yv, ps[j].path);
        if (!ok) {
          INFO("program:\n" << prog.text);
          INFO("aliases: " << an.names(p, ba.exit));
          INFO("uncovered: " << ps[i].var << to_string(ps[i].path) << " ~ " << ps[j].var
                             << to_string(ps[j].path));
          CHECK(ok);
        }
      }
    }
  }
  return checked;
}

}  // namespace

TEST_CASE("concrete sharing is covered by the analysis") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) checked += check_soundness(seed, 200);
  CHECK(checked > 1000);
}

TEST_CASE("concrete sharing is covered when every step widens") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) check_soundness(seed, 0);
}
