#pragma once

#include "ctgc/alias.hpp"
#include "ctgc/ir.hpp"
#include "ctgc/modecheck.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ctgc {

/// Exit sharing of a procedure. Variables of `exit_aliases` are argument
/// positions (0-based).
struct ProcSummary {
  ProcId id;
  AliasSet exit_aliases;
  bool no_alias_by_heuristic = false;
};

using SummaryTable = std::map<ProcId, ProcSummary>;

/// Head datastructures (variables are argument positions) that must be
/// dead at the call site for a reuse to be safe. Empty means unconditional.
using ReuseCondition = std::set<Datastructure>;

/// Context a procedure is called in. The analysis always assumes the
/// default pattern: unaliased inputs, only outputs used afterwards.
struct CallPattern {
  ProcId proc;
  AliasSet in_aliases;
  std::set<Datastructure> live_after;

  static CallPattern default_for(const Procedure& p);
};

struct DeadCellInfo {
  ProgramPoint decon_point = -1;
  VarId var = -1;
  std::string functor;
  std::size_t arity = 0;
  std::size_t size = 0;
  ReuseCondition condition;
};

struct AnalysisContext {
  const TypeTable* types = nullptr;
  DeclLookup decls;
  /// Summaries of imported and already analysed procedures.
  const SummaryTable* summaries = nullptr;
  std::optional<std::size_t> widen_threshold = 200;
};

/// Alias sets of one pass over a body.
struct BodyAnalysis {
  std::vector<AliasSet> after;   // indexed by program point
  std::vector<AliasSet> before;  // on entry to each goal
  AliasSet exit;
  bool top = false;
};

/// Variables used after each goal on its success continuation (plus the
/// outputs), and variables read if a selector goal fails.
struct Liveness {
  std::vector<std::set<VarId>> after;
  std::vector<std::set<VarId>> on_failure;
};

bool heuristic_no_alias(const ProcDecl& decl, const TypeTable& types);

/// Sharing a call adds, over the callee argument positions, or Top.
AliasSet call_aliases(const ProcDecl& callee, const AnalysisContext& ctx);

/// `in` must be closed under altclosure; only the pairs the goal adds are
/// closed against it.
AliasSet abstract_exec(const Procedure& p, const Goal& g, const AliasSet& in,
                       const AnalysisContext& ctx, std::vector<AliasSet>* record = nullptr);

BodyAnalysis analyse_body(const Procedure& p, const AnalysisContext& ctx);

/// Exit aliases of a body analysis restricted to the head, over positions.
AliasSet summarize_exit(const Procedure& p, const AliasSet& exit);

Liveness compute_liveness(const Procedure& p);
std::set<Datastructure> forward_use(const Procedure& p, ProgramPoint point);

struct CellStatus {
  bool dead = false;
  ReuseCondition condition;  // over head positions
};

/// Whether the cell at `cell` may be referenced after the point whose
/// aliases and live variables are given, other than through input head
/// variables; those references make up the condition.
CellStatus cell_status(const Procedure& p, const Datastructure& cell, const AliasSet& aliases,
                       const std::set<VarId>& live, const TypeTable& types);

std::vector<DeadCellInfo> detect_dead_cells(const Procedure& p, const BodyAnalysis& a,
                                            const Liveness& live, const TypeTable& types);

/// Strongly connected components of the module call graph, callees first.
std::vector<std::vector<ProcId>> call_sccs(const Module& m);

/// Kleene iteration over one SCC; writes the summaries into `summaries`.
/// Returns the number of iterations used.
int analyse_scc(const Module& m, const std::vector<ProcId>& scc, const AnalysisContext& ctx,
                SummaryTable& summaries);

/// Summaries for every procedure of the module. `ctx.summaries` holds the
/// imported ones; the result contains only the module's own procedures.
SummaryTable analyse_module(const Module& m, const AnalysisContext& ctx);

std::string condition_to_string(const ReuseCondition& c, const ProcDecl& decl,
                                const std::vector<std::string>& head_names);
std::string dead_cell_to_string(const Procedure& p, const DeadCellInfo& d);

}  // namespace ctgc
