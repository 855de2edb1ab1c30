#pragma once

#include "ctgc/ir.hpp"

#include <map>
#include <string>

namespace ctgc {

std::string print_type_def(const TypeDef& def);
/// `:- pred` and `:- mode` lines (plus `:- foreign_alias` for foreign procedures).
std::string print_decl(const ProcDecl& decl);
/// Clause text, with reuse annotations.
std::string print_procedure(const Procedure& p);
std::string print_goal(const Procedure& p, const Goal& g);

/// Core-language text of a module that parses back to the same module.
/// `comments` are emitted as `%` lines before the clause of each procedure.
std::string print_module(const Module& m, const std::map<ProcId, std::string>& comments = {});

}  // namespace ctgc
