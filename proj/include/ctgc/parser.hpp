#pragma once

#include "ctgc/ir.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ctgc {

class ParseError : public Error {
public:
  ParseError(int line, int column, const std::string& msg)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

/// Semantic error in a module: duplicate declarations, unknown types or
/// predicates, type errors, mode errors.
class CompileError : public Error {
public:
  using Error::Error;
};

/// What a module can see from the modules it imports.
struct ImportContext {
  TypeTable types;
  std::map<ProcId, ProcDecl> decls;

  /// Makes the types and declarations of `m` visible.
  void add_module(const Module& m);
};

/// Parses and elaborates a module: assigns program points, infers variable
/// types and checks well-modedness. Throws ParseError or CompileError.
Module parse_module(std::string_view text, const ImportContext& imports = {});

/// Parses only the module header, imports, type definitions and
/// declarations; clause bodies are skipped. Used to learn what a module
/// exports before its importers are elaborated.
Module parse_declarations(std::string_view text);

/// Declarations of a self-contained text (every type it mentions is
/// defined in it), fully checked, including foreign alias annotations.
Module parse_signature(std::string_view text);

/// A ground term written as a literal: `b(a(3, east))`, `[1, 2, 3]`, `42`.
/// The range form `[1..100]` is accepted for integer lists.
struct Term {
  bool is_integer = false;
  std::int64_t value = 0;
  std::string functor;
  std::vector<Term> args;

  static Term integer(std::int64_t v);
  static Term make(std::string functor, std::vector<Term> args = {});
};

bool operator==(const Term& a, const Term& b);

Term parse_term(std::string_view text);
std::string to_string(const Term& t);

}  // namespace ctgc
