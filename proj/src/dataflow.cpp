#include "ctgc/dataflow.hpp"

#include <algorithm>
#include <functional>

namespace ctgc {

namespace {

Datastructure var_root(VarId v) { return Datastructure{v, {}}; }

void add_pair(AliasSet& a, Datastructure x, Datastructure y, const TypeEnv& env) {
  AliasPair p(normalize_path(x, env), normalize_path(y, env));
  if (informative(p, env)) a.insert(std::move(p));
}

AliasSet finish(const AliasSet& in, const AliasSet& added, const AnalysisContext& ctx,
                const TypeEnv& env) {
  return maybe_widen(reduce(in, altclosure(in, added, env), env), ctx.widen_threshold, env);
}

}  // namespace

CallPattern CallPattern::default_for(const Procedure& p) {
  CallPattern out;
  out.proc = p.id();
  for (std::size_t i = 0; i < p.head.size(); ++i)
    if (p.decl.arg_modes[i] == Mode::out) out.live_after.insert(var_root(p.head[i]));
  return out;
}

bool heuristic_no_alias(const ProcDecl& decl, const TypeTable& types) {
  for (std::size_t i = 0; i < decl.arity(); ++i)
    if (decl.arg_modes[i] == Mode::out && types.has_heap_cells(decl.arg_types[i])) return false;
  return true;
}

AliasSet call_aliases(const ProcDecl& callee, const AnalysisContext& ctx) {
  if (callee.builtin) return {};
  if (callee.foreign) {
    if (callee.foreign_alias) return callee.foreign_alias->aliases;
  } else if (ctx.summaries) {
    auto it = ctx.summaries->find(callee.id());
    if (it != ctx.summaries->end()) return it->second.exit_aliases;
  }
  if (heuristic_no_alias(callee, *ctx.types)) return {};
  return AliasSet::top();
}

AliasSet abstract_exec(const Procedure& p, const Goal& g, const AliasSet& in,
                       const AnalysisContext& ctx, std::vector<AliasSet>* record) {
  TypeEnv env = p.type_env(*ctx.types);
  AliasSet out;
  if (in.is_top()) {
    out = in;
    if (record)
      for_each_goal(g, [&](const Goal& x) { (*record)[static_cast<std::size_t>(x.point)] = in; });
    return out;
  }
  auto heap = [&](VarId v) { return ctx.types->has_heap_cells(p.var_type(v)); };
  switch (g.kind) {
    case Goal::Kind::test:
      out = in;
      break;
    case Goal::Kind::assign:
      if (heap(g.lhs)) add_pair(out, var_root(g.lhs), var_root(g.rhs), env);
      out = finish(in, out, ctx, env);
      break;
    case Goal::Kind::construct:
    case Goal::Kind::deconstruct:
      if (!g.int_value) {
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          const Arg& a = g.args[i];
          if (!a.is_var() || !heap(a.var)) continue;
          Datastructure field{g.lhs, {Selector::field(g.functor, g.args.size(), i + 1)}};
          add_pair(out, std::move(field), var_root(a.var), env);
        }
      }
      out = finish(in, out, ctx, env);
      break;
    case Goal::Kind::call: {
      const ProcDecl* d = ctx.decls(g.callee_id());
      if (d == nullptr) throw Error("unknown procedure " + g.callee_id().str());
      AliasSet eff = call_aliases(*d, ctx);
      if (eff.is_top()) {
        out = AliasSet::top();
        break;
      }
      std::set<VarId> positions;
      std::map<VarId, VarId> mapping;
      for (std::size_t i = 0; i < g.args.size(); ++i) {
        if (!g.args[i].is_var()) continue;
        positions.insert(static_cast<VarId>(i));
        mapping[static_cast<VarId>(i)] = g.args[i].var;
      }
      AliasSet renamed = rename(project(eff, positions), mapping);
      for (const auto& pr : renamed.pairs()) {
        AliasPair np(normalize_path(pr.first, env), normalize_path(pr.second, env));
        if (informative(np, env)) out.insert(std::move(np));
      }
      out = finish(in, maybe_widen(out, ctx.widen_threshold, env), ctx, env);
      break;
    }
    case Goal::Kind::conj:
      out = in;
      for (const auto& c : g.goals) out = abstract_exec(p, c, out, ctx, record);
      break;
    case Goal::Kind::disj: {
      bool first = true;
      for (const auto& b : g.goals) {
        AliasSet r = abstract_exec(p, b, in, ctx, record);
        out = first ? r : reduce(out, alias_join(out, r), env);
        first = false;
      }
      out = maybe_widen(out, ctx.widen_threshold, env);
      break;
    }
  }
  if (record) (*record)[static_cast<std::size_t>(g.point)] = out;
  return out;
}

BodyAnalysis analyse_body(const Procedure& p, const AnalysisContext& ctx) {
  BodyAnalysis out;
  out.after.assign(static_cast<std::size_t>(p.point_count()), AliasSet{});
  out.exit = abstract_exec(p, p.body, AliasSet{}, ctx, &out.after);
  out.before.assign(out.after.size(), AliasSet{});
  std::function<void(const Goal&, const AliasSet&)> entry = [&](const Goal& g, const AliasSet& in) {
    out.before[static_cast<std::size_t>(g.point)] = in;
    if (g.kind == Goal::Kind::conj) {
      const AliasSet* cur = &in;
      for (const auto& c : g.goals) {
        entry(c, *cur);
        cur = &out.after[static_cast<std::size_t>(c.point)];
      }
    } else if (g.kind == Goal::Kind::disj) {
      for (const auto& c : g.goals) entry(c, in);
    }
  };
  entry(p.body, AliasSet{});
  for (const auto& a : out.after)
    if (a.is_top()) out.top = true;
  return out;
}

AliasSet summarize_exit(const Procedure& p, const AliasSet& exit) {
  if (exit.is_top()) return exit;
  std::set<VarId> head(p.head.begin(), p.head.end());
  std::map<VarId, VarId> mapping;
  for (std::size_t i = 0; i < p.head.size(); ++i) mapping[p.head[i]] = static_cast<VarId>(i);
  AliasSet out;
  AliasSet renamed = rename(project(exit, head), mapping);
  for (const auto& pr : renamed.pairs())
    if (!(pr.first == pr.second)) out.insert(pr);
  return out;
}

// ---------------------------------------------------------------------------
// Liveness

namespace {

void liveness_walk(const Goal& g, const std::set<VarId>& cont, Liveness& out) {
  out.after[static_cast<std::size_t>(g.point)] = cont;
  if (g.kind == Goal::Kind::conj) {
    std::set<VarId> c = cont;
    for (auto it = g.goals.rbegin(); it != g.goals.rend(); ++it) {
      liveness_walk(*it, c, out);
      collect_vars(*it, c);
    }
  } else if (g.kind == Goal::Kind::disj) {
    for (std::size_t b = 0; b < g.goals.size(); ++b) {
      liveness_walk(g.goals[b], cont, out);
      std::set<VarId> later;
      for (std::size_t k = b + 1; k < g.goals.size(); ++k) collect_vars(g.goals[k], later);
      const Goal& br = g.goals[b];
      const Goal& selector = br.kind == Goal::Kind::conj ? br.goals.front() : br;
      out.on_failure[static_cast<std::size_t>(selector.point)] = std::move(later);
    }
  }
}

}  // namespace

Liveness compute_liveness(const Procedure& p) {
  Liveness out;
  auto n = static_cast<std::size_t>(p.point_count());
  out.after.resize(n);
  out.on_failure.resize(n);
  std::set<VarId> outputs;
  for (std::size_t i = 0; i < p.head.size(); ++i)
    if (p.decl.arg_modes[i] == Mode::out) outputs.insert(p.head[i]);
  liveness_walk(p.body, {}, out);
  for (auto& s : out.after) s.insert(outputs.begin(), outputs.end());
  return out;
}

std::set<Datastructure> forward_use(const Procedure& p, ProgramPoint point) {
  Liveness l = compute_liveness(p);
  std::set<Datastructure> out;
  for (VarId v : l.after.at(static_cast<std::size_t>(point))) out.insert(var_root(v));
  return out;
}

// ---------------------------------------------------------------------------
// Deadness

CellStatus cell_status(const Procedure& p, const Datastructure& cell, const AliasSet& aliases,
                       const std::set<VarId>& live, const TypeTable& types) {
  CellStatus out;
  if (aliases.is_top() || live.count(cell.var)) return out;
  TypeEnv env = p.type_env(types);
  auto is_input_head = [&](VarId v) {
    int pos = p.head_position(v);
    return pos >= 0 && p.decl.arg_modes[static_cast<std::size_t>(pos)] == Mode::in;
  };
  auto to_head = [&](const Datastructure& d) {
    Datastructure n = normalize_path(d, env);
    n.var = p.head_position(d.var);
    return n;
  };
  if (is_input_head(cell.var)) out.condition.insert(to_head(cell));
  const TypeExpr& root = env.type_of(cell.var);
  bool cell_has_type_tail = !cell.path.empty() && cell.path.back().is_type();
  for (const auto& pr : aliases.pairs()) {
    for (int s = 0; s < 2; ++s) {
      const Datastructure& mine = s == 0 ? pr.first : pr.second;
      const Datastructure& other = s == 0 ? pr.second : pr.first;
      if (mine.var != cell.var) continue;
      if (!may_reach(mine.path, cell.path, root, types)) continue;
      if (other.var == cell.var) continue;
      if (live.count(other.var)) return CellStatus{};
      if (!is_input_head(other.var)) continue;
      Datastructure reached = other;
      bool other_typed = !other.path.empty() && other.path.back().is_type();
      bool exact = !cell_has_type_tail && std::none_of(mine.path.begin(), mine.path.end(),
                                                       [](const Selector& x) { return x.is_type(); });
      if (!other_typed) {
        if (exact)
          reached.path.insert(reached.path.end(),
                              cell.path.begin() + static_cast<long>(mine.path.size()),
                              cell.path.end());
        else
          reached.path.push_back(Selector::of_type(selected_type(cell, env)));
      }
      out.condition.insert(to_head(reached));
    }
  }
  out.dead = true;
  return out;
}

std::vector<DeadCellInfo> detect_dead_cells(const Procedure& p, const BodyAnalysis& a,
                                            const Liveness& live, const TypeTable& types) {
  std::vector<DeadCellInfo> out;
  if (a.top) return out;
  for_each_goal(p.body, [&](const Goal& g) {
    if (g.kind != Goal::Kind::deconstruct || g.int_value) return;
    auto size = types.cell_size(g.functor, p.var_type(g.lhs));
    if (!size) return;
    auto idx = static_cast<std::size_t>(g.point);
    CellStatus st = cell_status(p, var_root(g.lhs), a.after[idx], live.after[idx], types);
    if (!st.dead) return;
    out.push_back(DeadCellInfo{g.point, g.lhs, g.functor, g.args.size(), *size,
                               std::move(st.condition)});
  });
  return out;
}

// ---------------------------------------------------------------------------
// Fixpoint

std::vector<std::vector<ProcId>> call_sccs(const Module& m) {
  std::map<ProcId, std::size_t> index;
  for (std::size_t i = 0; i < m.procedures.size(); ++i) index[m.procedures[i].id()] = i;
  std::vector<std::vector<std::size_t>> edges(m.procedures.size());
  for (std::size_t i = 0; i < m.procedures.size(); ++i) {
    for_each_goal(m.procedures[i].body, [&](const Goal& g) {
      if (g.kind != Goal::Kind::call) return;
      auto it = index.find(g.callee_id());
      if (it != index.end()) edges[i].push_back(it->second);
    });
  }
  // Tarjan's algorithm; components come out callees first.
  std::vector<int> idx(m.procedures.size(), -1), low(m.procedures.size(), 0);
  std::vector<bool> on_stack(m.procedures.size(), false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<ProcId>> out;
  int counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    idx[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : edges[v]) {
      if (idx[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      std::vector<ProcId> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(m.procedures[w].id());
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (std::size_t i = 0; i < m.procedures.size(); ++i)
    if (idx[i] < 0) visit(i);
  return out;
}

int analyse_scc(const Module& m, const std::vector<ProcId>& scc, const AnalysisContext& ctx,
                SummaryTable& summaries) {
  constexpr int kMaxIterations = 64;
  for (const auto& id : scc) {
    ProcSummary s;
    s.id = id;
    summaries[id] = s;
  }
  AnalysisContext local = ctx;
  local.summaries = &summaries;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    bool changed = false;
    for (const auto& id : scc) {
      const Procedure* p = m.find_procedure(id);
      BodyAnalysis a = analyse_body(*p, local);
      AliasSet fresh = summarize_exit(*p, a.exit);
      ProcSummary& s = summaries[id];
      TypeEnv henv = Procedure::head_env(p->decl, *ctx.types);
      if (alias_leq(fresh, s.exit_aliases, henv)) continue;
      s.exit_aliases = maybe_widen(alias_join(s.exit_aliases, fresh), ctx.widen_threshold, henv);
      changed = true;
    }
    if (!changed) return iter;
  }
  for (const auto& id : scc) summaries[id].exit_aliases = AliasSet::top();
  return kMaxIterations;
}

SummaryTable analyse_module(const Module& m, const AnalysisContext& ctx) {
  SummaryTable all = ctx.summaries ? *ctx.summaries : SummaryTable{};
  for (const auto& scc : call_sccs(m)) analyse_scc(m, scc, ctx, all);
  SummaryTable out;
  for (const auto& p : m.procedures) {
    ProcSummary s = all[p.id()];
    s.no_alias_by_heuristic = heuristic_no_alias(p.decl, *ctx.types);
    out[p.id()] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text

std::string condition_to_string(const ReuseCondition& c, const ProcDecl& decl,
                                const std::vector<std::string>& head_names) {
  (void)decl;
  std::vector<std::string> parts;
  for (const auto& d : c)
    parts.push_back(to_string(d, [&](VarId v) { return head_names.at(static_cast<std::size_t>(v)); }));
  std::sort(parts.begin(), parts.end());
  std::string out = "{";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + "}";
}

std::string dead_cell_to_string(const Procedure& p, const DeadCellInfo& d) {
  std::vector<std::string> heads;
  for (VarId v : p.head) heads.push_back(p.var_name(v));
  return "dead p" + std::to_string(d.decon_point) + " " + p.var_name(d.var) + " " + d.functor +
         "/" + std::to_string(d.arity) + " size=" + std::to_string(d.size) +
         " cond=" + condition_to_string(d.condition, p.decl, heads);
}

}  // namespace ctgc
