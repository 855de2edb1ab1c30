#pragma once

#include "ctgc/dataflow.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ctgc {

struct ReuseConstraint {
  enum class Kind { matching, within_k, same_cons };
  Kind kind = Kind::matching;
  int k = 1;

  /// `match`, `within:K` (1 <= K <= 8) or `same-cons`. Throws Error.
  static ReuseConstraint parse(std::string_view text);
  std::string str() const;
};

bool constraint_admits(const ReuseConstraint& c, const DeadCellInfo& dead,
                       std::string_view functor, std::size_t arity, std::size_t size);

struct SelectionStrategy {
  enum class Kind { lifo, random };
  Kind kind = Kind::lifo;
  std::uint64_t seed = 0;

  static SelectionStrategy parse(std::string_view text, std::uint64_t seed = 0);
  std::string str() const;
};

struct ReusePair {
  ProgramPoint construct = -1;
  ProgramPoint decon = -1;
  ReuseCondition condition;
};

/// A call replaced by a call to a reuse version of the callee.
struct CallSubstitution {
  ProgramPoint call = -1;
  ProcId callee;
  std::string version;
  ReuseCondition condition;
};

struct ReuseAssignment {
  std::vector<ReusePair> pairs;
  std::vector<CallSubstitution> calls;
  ReuseCondition conditions;
  std::vector<ProgramPoint> residual;  // dead cells left unassigned
};

ReuseAssignment decide_direct(const Procedure& p, const std::vector<DeadCellInfo>& dead,
                              const TypeTable& types, const ReuseConstraint& constraint,
                              const SelectionStrategy& strategy);

/// Callees that have a separate reuse version, with its conditions over
/// the callee's argument positions.
struct VersionInfo {
  std::string reuse_name;
  ReuseCondition condition;
};
using VersionTable = std::map<ProcId, VersionInfo>;

/// Substitutes every call whose callee conditions hold at the call site.
/// Calls at `blocked` points are left alone; failed checks are reported.
std::vector<CallSubstitution> decide_indirect(const Procedure& p, const BodyAnalysis& a,
                                              const Liveness& live, const VersionTable& versions,
                                              const TypeTable& types,
                                              const std::set<ProgramPoint>& blocked = {},
                                              std::vector<ProgramPoint>* failed = nullptr);

struct ProcVersion {
  enum class Kind { plain, reuse };
  Kind kind = Kind::plain;
  ProcId base;
  std::string name;
  ReuseAssignment assignment;
  ReuseCondition conditions;
};

/// One version when the unconditional subset is everything, else two:
/// the plain one first.
std::vector<ProcVersion> split_versions(const Procedure& p, const ReuseAssignment& full);

Procedure annotate(const Procedure& p, const ProcVersion& v, const std::vector<DeadCellInfo>& dead);

struct ReuseOptions {
  ReuseConstraint constraint;
  SelectionStrategy strategy;
};

struct ProcReuse {
  ProcId id;
  std::vector<DeadCellInfo> dead;
  ReuseAssignment assignment;
  std::vector<ProcVersion> versions;
  std::vector<Procedure> annotated;
};

struct ModuleReuse {
  std::map<ProcId, ProcReuse> procs;
  /// Versions the module exports to its importers.
  VersionTable versions;
};

/// `ctx.summaries` must hold the summaries of the module and its imports.
ModuleReuse decide_module(const Module& m, const AnalysisContext& ctx,
                          const VersionTable& imported, const ReuseOptions& opts);

/// Module whose procedures are the annotated versions.
Module annotated_module(const Module& m, const ModuleReuse& r);

std::string reuse_dump(const Procedure& p, const ProcReuse& r);

}  // namespace ctgc
