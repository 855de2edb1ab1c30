#include "ctgc/reuse.hpp"

#include <algorithm>

namespace ctgc {

ReuseConstraint ReuseConstraint::parse(std::string_view text) {
  ReuseConstraint c;
  if (text == "match") return c;
  if (text == "same-cons") {
    c.kind = Kind::same_cons;
    return c;
  }
  if (text.substr(0, 7) == "within:") {
    std::string k(text.substr(7));
    if (k.size() == 1 && k[0] >= '1' && k[0] <= '8') {
      c.kind = Kind::within_k;
      c.k = k[0] - '0';
      return c;
    }
    throw Error("within:K needs 1 <= K <= 8, got '" + k + "'");
  }
  throw Error("unknown constraint '" + std::string(text) + "' (match, within:K, same-cons)");
}

std::string ReuseConstraint::str() const {
  switch (kind) {
    case Kind::matching:
      return "match";
    case Kind::within_k:
      return "within:" + std::to_string(k);
    case Kind::same_cons:
      return "same-cons";
  }
  return "";
}

bool constraint_admits(const ReuseConstraint& c, const DeadCellInfo& dead,
                       std::string_view functor, std::size_t arity, std::size_t size) {
  switch (c.kind) {
    case ReuseConstraint::Kind::matching:
      return dead.size == size;
    case ReuseConstraint::Kind::within_k:
      return dead.size >= size && dead.size - size <= static_cast<std::size_t>(c.k);
    case ReuseConstraint::Kind::same_cons:
      return dead.functor == functor && dead.arity == arity;
  }
  return false;
}

SelectionStrategy SelectionStrategy::parse(std::string_view text, std::uint64_t seed) {
  SelectionStrategy s;
  s.seed = seed;
  if (text == "lifo") return s;
  if (text == "random") {
    s.kind = Kind::random;
    return s;
  }
  throw Error("unknown strategy '" + std::string(text) + "' (lifo, random)");
}

std::string SelectionStrategy::str() const {
  return kind == Kind::lifo ? "lifo" : "random(" + std::to_string(seed) + ")";
}

namespace {

using BranchPath = std::vector<std::pair<ProgramPoint, std::size_t>>;

void branch_paths(const Goal& g, BranchPath& cur, std::map<ProgramPoint, BranchPath>& out) {
  out[g.point] = cur;
  for (std::size_t b = 0; b < g.goals.size(); ++b) {
    if (g.kind == Goal::Kind::disj) cur.emplace_back(g.point, b);
    branch_paths(g.goals[b], cur, out);
    if (g.kind == Goal::Kind::disj) cur.pop_back();
  }
}

bool is_prefix(const BranchPath& a, const BranchPath& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

bool exclusive(const BranchPath& a, const BranchPath& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i].first != b[i].first) return false;
    if (a[i].second != b[i].second) return true;
  }
  return false;
}

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

ReuseAssignment decide_direct(const Procedure& p, const std::vector<DeadCellInfo>& dead,
                              const TypeTable& types, const ReuseConstraint& constraint,
                              const SelectionStrategy& strategy) {
  ReuseAssignment out;
  std::map<ProgramPoint, BranchPath> paths;
  BranchPath cur;
  branch_paths(p.body, cur, paths);
  std::mt19937_64 rng(strategy.seed ^ name_hash(p.id().str()));
  // Constructs already served by each dead cell; a cell may serve several
  // constructs only when they lie in mutually exclusive branches.
  std::map<ProgramPoint, std::vector<ProgramPoint>> served;

  std::vector<const Goal*> constructs;
  for_each_goal(p.body, [&](const Goal& g) {
    if (g.kind == Goal::Kind::construct && !g.int_value) constructs.push_back(&g);
  });
  for (const Goal* c : constructs) {
    auto size = types.cell_size(c->functor, p.var_type(c->lhs));
    if (!size) continue;
    const BranchPath& cpath = paths[c->point];
    std::vector<const DeadCellInfo*> candidates;
    for (const auto& d : dead) {
      if (d.decon_point >= c->point) continue;
      if (!is_prefix(paths[d.decon_point], cpath)) continue;
      if (!constraint_admits(constraint, d, c->functor, c->args.size(), *size)) continue;
      bool free = true;
      for (ProgramPoint other : served[d.decon_point])
        if (!exclusive(paths[other], cpath)) free = false;
      if (free) candidates.push_back(&d);
    }
    if (candidates.empty()) continue;
    const DeadCellInfo* pick = nullptr;
    if (strategy.kind == SelectionStrategy::Kind::lifo) {
      pick = *std::max_element(candidates.begin(), candidates.end(),
                               [](const DeadCellInfo* a, const DeadCellInfo* b) {
                                 return a->decon_point < b->decon_point;
                               });
    } else {
      std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
      pick = candidates[dist(rng)];
    }
    served[pick->decon_point].push_back(c->point);
    out.pairs.push_back(ReusePair{c->point, pick->decon_point, pick->condition});
    out.conditions.insert(pick->condition.begin(), pick->condition.end());
  }
  for (const auto& d : dead)
    if (served[d.decon_point].empty()) out.residual.push_back(d.decon_point);
  return out;
}

std::vector<CallSubstitution> decide_indirect(const Procedure& p, const BodyAnalysis& a,
                                              const Liveness& live, const VersionTable& versions,
                                              const TypeTable& types,
                                              const std::set<ProgramPoint>& blocked,
                                              std::vector<ProgramPoint>* failed) {
  std::vector<CallSubstitution> out;
  for_each_goal(p.body, [&](const Goal& g) {
    if (g.kind != Goal::Kind::call || blocked.count(g.point)) return;
    auto it = versions.find(g.callee_id());
    if (it == versions.end()) return;
    auto idx = static_cast<std::size_t>(g.point);
    std::set<VarId> live_here = live.after[idx];
    live_here.insert(live.on_failure[idx].begin(), live.on_failure[idx].end());
    CallSubstitution sub{g.point, g.callee_id(), it->second.reuse_name, {}};
    // Aliases the call itself creates only concern its outputs, which hold
    // no cells yet; the arguments are judged on entry.
    bool ok = !a.before[idx].is_top() && !a.after[idx].is_top();
    for (const auto& cond : it->second.condition) {
      if (!ok) break;
      const Arg& actual = g.args.at(static_cast<std::size_t>(cond.var));
      if (!actual.is_var()) continue;  // literals own no cells
      Datastructure cell{actual.var, cond.path};
      CellStatus st = cell_status(p, cell, a.before[idx], live_here, types);
      if (!st.dead) ok = false;
      sub.condition.insert(st.condition.begin(), st.condition.end());
    }
    if (ok)
      out.push_back(std::move(sub));
    else if (failed)
      failed->push_back(g.point);
  });
  return out;
}

std::vector<ProcVersion> split_versions(const Procedure& p, const ReuseAssignment& full) {
  ProcVersion plain;
  plain.kind = ProcVersion::Kind::plain;
  plain.base = p.id();
  plain.name = p.decl.name;
  for (const auto& pr : full.pairs)
    if (pr.condition.empty()) plain.assignment.pairs.push_back(pr);
  for (const auto& c : full.calls)
    if (c.condition.empty()) plain.assignment.calls.push_back(c);
  if (plain.assignment.pairs.size() == full.pairs.size() &&
      plain.assignment.calls.size() == full.calls.size()) {
    plain.assignment = full;
    return {plain};
  }
  ProcVersion reuse;
  reuse.kind = ProcVersion::Kind::reuse;
  reuse.base = p.id();
  reuse.name = p.decl.name + "__r";
  reuse.assignment = full;
  reuse.conditions = full.conditions;
  return {plain, reuse};
}

Procedure annotate(const Procedure& p, const ProcVersion& v, const std::vector<DeadCellInfo>& dead) {
  Procedure out = p;
  out.decl.name = v.name;
  std::set<ProgramPoint> used;
  for (const auto& pr : v.assignment.pairs) {
    out.goal_at(pr.construct)->reuse_of = pr.decon;
    used.insert(pr.decon);
  }
  for (const auto& c : v.assignment.calls) out.goal_at(c.call)->callee = c.version;
  for (const auto& d : dead)
    if (d.condition.empty() && !used.count(d.decon_point)) out.goal_at(d.decon_point)->cacheable = true;
  return out;
}

namespace {

struct SccState {
  std::map<ProcId, BodyAnalysis> analysis;
  std::map<ProcId, Liveness> liveness;
  std::map<ProcId, std::vector<DeadCellInfo>> dead;
  std::map<ProcId, ReuseAssignment> direct;
};

}  // namespace

ModuleReuse decide_module(const Module& m, const AnalysisContext& ctx,
                          const VersionTable& imported, const ReuseOptions& opts) {
  ModuleReuse out;
  VersionTable table = imported;
  const TypeTable& types = *ctx.types;
  for (const auto& scc : call_sccs(m)) {
    SccState st;
    for (const auto& id : scc) {
      const Procedure& p = *m.find_procedure(id);
      st.analysis[id] = analyse_body(p, ctx);
      st.liveness[id] = compute_liveness(p);
      st.dead[id] = detect_dead_cells(p, st.analysis[id], st.liveness[id], types);
      st.direct[id] = decide_direct(p, st.dead[id], types, opts.constraint, opts.strategy);
    }
    auto initial = [&] {
      VersionTable t = table;
      for (const auto& id : scc)
        if (!st.direct[id].pairs.empty())
          t[id] = VersionInfo{id.name + "__r", st.direct[id].conditions};
      return t;
    };
    std::map<ProcId, std::set<ProgramPoint>> blocked;
    std::map<ProcId, std::vector<CallSubstitution>> subs;
    VersionTable work = initial();
    for (;;) {
      bool any_failed = false;
      bool changed = false;
      for (const auto& id : scc) {
        const Procedure& p = *m.find_procedure(id);
        std::vector<ProgramPoint> failed;
        subs[id] = decide_indirect(p, st.analysis[id], st.liveness[id], work, types, blocked[id],
                                   &failed);
        for (ProgramPoint f : failed) {
          blocked[id].insert(f);
          any_failed = true;
        }
        ReuseCondition cond = st.direct[id].conditions;
        for (const auto& s : subs[id]) cond.insert(s.condition.begin(), s.condition.end());
        if (st.direct[id].pairs.empty() && subs[id].empty()) continue;
        VersionInfo info{id.name + "__r", cond};
        auto it = work.find(id);
        if (it == work.end() || it->second.condition != cond) {
          work[id] = info;
          changed = true;
        }
      }
      if (any_failed) {
        work = initial();
        continue;
      }
      if (!changed) break;
    }
    for (const auto& id : scc) {
      const Procedure& p = *m.find_procedure(id);
      ProcReuse r;
      r.id = id;
      r.dead = st.dead[id];
      r.assignment = st.direct[id];
      r.assignment.calls = subs[id];
      for (const auto& s : subs[id])
        r.assignment.conditions.insert(s.condition.begin(), s.condition.end());
      r.versions = split_versions(p, r.assignment);
      out.procs[id] = std::move(r);
    }
    // Members that ended with a single version are called by their own name.
    for (const auto& id : scc) {
      if (out.procs[id].versions.size() == 2)
        table[id] = VersionInfo{id.name + "__r", out.procs[id].versions[1].conditions};
      else
        table.erase(id);
    }
    for (const auto& id : scc) {
      ProcReuse& r = out.procs[id];
      auto fix = [&](std::vector<CallSubstitution>& calls) {
        for (auto& c : calls)
          if (std::find(scc.begin(), scc.end(), c.callee) != scc.end() && !table.count(c.callee))
            c.version = c.callee.name;
      };
      fix(r.assignment.calls);
      for (auto& v : r.versions) fix(v.assignment.calls);
      const Procedure& p = *m.find_procedure(id);
      for (const auto& v : r.versions) r.annotated.push_back(annotate(p, v, r.dead));
    }
  }
  for (const auto& p : m.procedures) {
    auto it = table.find(p.id());
    if (it != table.end()) out.versions[p.id()] = it->second;
  }
  return out;
}

Module annotated_module(const Module& m, const ModuleReuse& r) {
  Module out = m;
  out.procedures.clear();
  out.decls.clear();
  for (const auto& d : m.decls) {
    out.decls.push_back(d);
    auto it = r.procs.find(d.id());
    if (it == r.procs.end()) continue;
    for (const auto& p : it->second.annotated) {
      if (p.decl.name != d.name) out.decls.push_back(p.decl);
      out.procedures.push_back(p);
    }
  }
  return out;
}

std::string reuse_dump(const Procedure& p, const ProcReuse& r) {
  std::vector<std::string> heads;
  for (VarId v : p.head) heads.push_back(p.var_name(v));
  auto cond = [&](const ReuseCondition& c) { return condition_to_string(c, p.decl, heads); };
  std::string out;
  for (const auto& pr : r.assignment.pairs) {
    const Goal* c = p.goal_at(pr.construct);
    const Goal* d = p.goal_at(pr.decon);
    out += "reuse c@p" + std::to_string(pr.construct) + " " + p.var_name(c->lhs) + " <- d@p" +
           std::to_string(pr.decon) + " " + p.var_name(d->lhs) + " (" + d->functor + "/" +
           std::to_string(d->args.size()) + ", cond=" + cond(pr.condition) + ")\n";
  }
  for (const auto& c : r.assignment.calls)
    out += "call p" + std::to_string(c.call) + " " + c.callee.str() + " -> " + c.version +
           " (cond=" + cond(c.condition) + ")\n";
  for (const auto& v : r.versions) {
    out += "version " + p.id().str() + ": ";
    if (v.kind == ProcVersion::Kind::plain)
      out += "plain " + v.name;
    else
      out += "reuse " + v.name + " cond=" + cond(v.conditions);
    out += "\n";
  }
  return out;
}

}  // namespace ctgc
