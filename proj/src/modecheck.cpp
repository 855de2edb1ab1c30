#include "ctgc/modecheck.hpp"

#include <set>

namespace ctgc {

namespace {

class ModeChecker {
public:
  ModeChecker(const Procedure& p, const DeclLookup& decls) : proc_(p), decls_(decls) {}

  std::optional<ModeError> run() {
    std::set<VarId> ground;
    for (std::size_t i = 0; i < proc_.head.size(); ++i)
      if (proc_.decl.arg_modes[i] == Mode::in) ground.insert(proc_.head[i]);
    if (!check(proc_.body, ground)) return error_;
    for (std::size_t i = 0; i < proc_.head.size(); ++i) {
      if (proc_.decl.arg_modes[i] == Mode::out && !ground.count(proc_.head[i]))
        return ModeError{proc_.body.point, proc_.head[i],
                         "output '" + proc_.var_name(proc_.head[i]) + "' is never bound"};
    }
    return std::nullopt;
  }

private:
  bool fail(const Goal& g, VarId v, const std::string& what) {
    error_ = ModeError{g.point, v, what};
    return false;
  }

  bool need_ground(const Goal& g, VarId v, const std::set<VarId>& ground) {
    if (ground.count(v)) return true;
    return fail(g, v, "'" + proc_.var_name(v) + "' is not ground at p" + std::to_string(g.point));
  }

  bool bind(const Goal& g, VarId v, std::set<VarId>& ground) {
    if (!ground.insert(v).second)
      return fail(g, v, "'" + proc_.var_name(v) + "' is already bound at p" +
                            std::to_string(g.point));
    return true;
  }

  bool check(const Goal& g, std::set<VarId>& ground) {
    switch (g.kind) {
      case Goal::Kind::test:
        return need_ground(g, g.lhs, ground) && need_ground(g, g.rhs, ground);
      case Goal::Kind::assign:
        return need_ground(g, g.rhs, ground) && bind(g, g.lhs, ground);
      case Goal::Kind::construct:
        for (const auto& a : g.args)
          if (a.is_var() && !need_ground(g, a.var, ground)) return false;
        return bind(g, g.lhs, ground);
      case Goal::Kind::deconstruct:
        if (!need_ground(g, g.lhs, ground)) return false;
        for (const auto& a : g.args)
          if (a.is_var() && !bind(g, a.var, ground)) return false;
        return true;
      case Goal::Kind::call: {
        const ProcDecl* d = decls_(g.callee_id());
        if (d == nullptr) return fail(g, -1, "unknown procedure " + g.callee_id().str());
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          const Arg& a = g.args[i];
          if (d->arg_modes[i] == Mode::in) {
            if (a.is_var() && !need_ground(g, a.var, ground)) return false;
          } else {
            if (!a.is_var())
              return fail(g, -1, "literal passed as output argument " + std::to_string(i + 1) +
                                     " of " + d->name);
            if (!bind(g, a.var, ground)) return false;
          }
        }
        return true;
      }
      case Goal::Kind::conj:
        for (const auto& c : g.goals)
          if (!check(c, ground)) return false;
        return true;
      case Goal::Kind::disj:
        return check_disj(g, ground);
    }
    return true;
  }

  bool check_disj(const Goal& g, std::set<VarId>& ground) {
    std::set<VarId> inside;
    collect_vars(g, inside);
    std::set<VarId> outside(proc_.head.begin(), proc_.head.end());
    collect_outside(proc_.body, g.point, outside);

    std::optional<std::set<VarId>> bound_nonlocals;
    for (const auto& branch : g.goals) {
      std::set<VarId> local = ground;
      if (!check(branch, local)) return false;
      std::set<VarId> bound;
      for (VarId v : local)
        if (!ground.count(v) && outside.count(v)) bound.insert(v);
      if (!bound_nonlocals) {
        bound_nonlocals = bound;
      } else if (*bound_nonlocals != bound) {
        VarId culprit = -1;
        for (VarId v : *bound_nonlocals)
          if (!bound.count(v)) culprit = v;
        for (VarId v : bound)
          if (!bound_nonlocals->count(v)) culprit = v;
        return fail(g, culprit,
                    "branches of the disjunction at p" + std::to_string(g.point) +
                        " bind different variables (" + proc_.var_name(culprit) + ")");
      }
    }
    if (bound_nonlocals) ground.insert(bound_nonlocals->begin(), bound_nonlocals->end());
    return true;
  }

  static void collect_outside(const Goal& g, ProgramPoint skip, std::set<VarId>& out) {
    if (g.point == skip) return;
    for (VarId v : goal_vars(g)) out.insert(v);
    for (const auto& c : g.goals) collect_outside(c, skip, out);
  }

  const Procedure& proc_;
  const DeclLookup& decls_;
  ModeError error_;
};

}  // namespace

std::optional<ModeError> check_well_modedness(const Procedure& p, const DeclLookup& decls) {
  return ModeChecker(p, decls).run();
}

}  // namespace ctgc
