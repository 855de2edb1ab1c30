#pragma once

#include "ctgc/ir.hpp"

#include <functional>
#include <optional>
#include <string>

namespace ctgc {

struct ModeError {
  ProgramPoint point = -1;
  VarId var = -1;
  std::string message;
};

using DeclLookup = std::function<const ProcDecl*(const ProcId&)>;

/// Checks that the body is well moded under left-to-right execution:
/// inputs of every goal are ground, outputs are free, and switch branches
/// bind the same non-local variables. Returns the first violation.
std::optional<ModeError> check_well_modedness(const Procedure& p, const DeclLookup& decls);

}  // namespace ctgc
