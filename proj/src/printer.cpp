#include "ctgc/printer.hpp"

#include <sstream>

namespace ctgc {

namespace {

std::string join_types(const std::vector<TypeExpr>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += ", ";
    out += ts[i].str();
  }
  return out;
}

std::string print_arg(const Procedure& p, const Arg& a) {
  if (a.is_var()) return p.var_name(a.var);
  if (a.literal->kind == Literal::Kind::integer) return std::to_string(a.literal->value);
  return a.literal->functor;
}

std::string print_term(const Procedure& p, const Goal& g) {
  if (g.int_value) return std::to_string(*g.int_value);
  if (g.functor == "[|]" && g.args.size() == 2)
    return "[" + print_arg(p, g.args[0]) + " | " + print_arg(p, g.args[1]) + "]";
  std::string out = g.functor;
  if (!g.args.empty()) {
    out += "(";
    for (std::size_t i = 0; i < g.args.size(); ++i) {
      if (i) out += ", ";
      out += print_arg(p, g.args[i]);
    }
    out += ")";
  }
  return out;
}

std::string atomic(const Procedure& p, const Goal& g) {
  switch (g.kind) {
    case Goal::Kind::test:
      return p.var_name(g.lhs) + " == " + p.var_name(g.rhs);
    case Goal::Kind::assign:
      return p.var_name(g.lhs) + " := " + p.var_name(g.rhs);
    case Goal::Kind::construct: {
      std::string out = p.var_name(g.lhs) + " <= " + print_term(p, g);
      if (g.reuse_of) out += " @reuse(p" + std::to_string(*g.reuse_of) + ")";
      return out;
    }
    case Goal::Kind::deconstruct: {
      std::string out = p.var_name(g.lhs) + " => " + print_term(p, g);
      if (g.cacheable) out += " @cacheable";
      return out;
    }
    case Goal::Kind::call: {
      std::string out = g.callee;
      if (!g.args.empty()) {
        out += "(";
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          if (i) out += ", ";
          out += print_arg(p, g.args[i]);
        }
        out += ")";
      }
      return out;
    }
    default:
      return "";
  }
}

void emit(const Procedure& p, const Goal& g, int indent, std::ostringstream& out);

void emit_conj_items(const Procedure& p, const std::vector<Goal>& goals, int indent,
                     std::ostringstream& out, bool first_inline) {
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (i) out << ",\n";
    if (i || !first_inline) out << std::string(static_cast<std::size_t>(indent), ' ');
    emit(p, goals[i], indent, out);
  }
}

// Writes `g` assuming the cursor is already at `indent`.
void emit(const Procedure& p, const Goal& g, int indent, std::ostringstream& out) {
  if (g.kind == Goal::Kind::conj) {
    if (g.goals.empty()) {
      out << "true";
      return;
    }
    emit_conj_items(p, g.goals, indent, out, true);
    return;
  }
  if (g.kind == Goal::Kind::disj) {
    std::string pad(static_cast<std::size_t>(indent), ' ');
    for (std::size_t b = 0; b < g.goals.size(); ++b) {
      if (b) out << "\n" << pad << "; ";
      else out << "( ";
      const Goal& br = g.goals[b];
      if (br.kind == Goal::Kind::conj)
        emit_conj_items(p, br.goals, indent + 2, out, true);
      else
        emit(p, br, indent + 2, out);
    }
    out << "\n" << pad << ")";
    return;
  }
  out << atomic(p, g);
}

}  // namespace

std::string print_type_def(const TypeDef& def) {
  std::string out = ":- type " + def.name;
  if (!def.params.empty()) {
    out += "(";
    for (std::size_t i = 0; i < def.params.size(); ++i) {
      if (i) out += ", ";
      out += def.params[i];
    }
    out += ")";
  }
  out += " --->";
  for (std::size_t i = 0; i < def.alternatives.size(); ++i) {
    const Alternative& alt = def.alternatives[i];
    out += i ? " ; " : " ";
    if (alt.functor == "[|]" && alt.args.size() == 2) {
      out += "[" + alt.args[0].str() + " | " + alt.args[1].str() + "]";
    } else {
      out += alt.functor;
      if (!alt.args.empty()) out += "(" + join_types(alt.args) + ")";
    }
  }
  return out + ".";
}

std::string print_decl(const ProcDecl& d) {
  std::string out = d.foreign ? ":- foreign_pred " : ":- pred ";
  out += d.name;
  if (d.arity()) out += "(" + join_types(d.arg_types) + ")";
  out += ".\n:- mode " + d.name;
  if (d.arity()) {
    out += "(";
    for (std::size_t i = 0; i < d.arg_modes.size(); ++i) {
      if (i) out += ", ";
      out += d.arg_modes[i] == Mode::in ? "in" : "out";
    }
    out += ")";
  }
  out += d.determinism == Determinism::det ? " is det." : " is semidet.";
  if (d.foreign_alias) {
    out += "\n:- foreign_alias " + d.name;
    if (!d.foreign_alias->head_names.empty()) {
      out += "(";
      for (std::size_t i = 0; i < d.foreign_alias->head_names.size(); ++i) {
        if (i) out += ", ";
        out += d.foreign_alias->head_names[i];
      }
      out += ")";
    }
    out += " " + d.foreign_alias->text + ".";
  }
  return out;
}

std::string print_goal(const Procedure& p, const Goal& g) {
  std::ostringstream out;
  emit(p, g, 0, out);
  return out.str();
}

std::string print_procedure(const Procedure& p) {
  std::ostringstream out;
  out << p.decl.name;
  if (!p.head.empty()) {
    out << "(";
    for (std::size_t i = 0; i < p.head.size(); ++i) {
      if (i) out << ", ";
      out << p.var_name(p.head[i]);
    }
    out << ")";
  }
  if (!(p.body.kind == Goal::Kind::conj && p.body.goals.empty())) {
    out << " :-\n    ";
    emit(p, p.body, 4, out);
  }
  out << ".\n";
  return out.str();
}

std::string print_module(const Module& m, const std::map<ProcId, std::string>& comments) {
  std::ostringstream out;
  out << ":- module " << m.name << ".\n";
  for (const auto& i : m.imports) out << ":- import " << i << ".\n";
  if (!m.types.empty()) out << "\n";
  for (const auto& t : m.types) out << print_type_def(t) << "\n";
  for (const auto& d : m.decls) {
    out << "\n" << print_decl(d) << "\n";
    const Procedure* p = m.find_procedure(d.id());
    if (p == nullptr) continue;
    auto it = comments.find(p->id());
    if (it != comments.end()) {
      std::istringstream lines(it->second);
      std::string line;
      while (std::getline(lines, line)) out << "% " << line << "\n";
    }
    out << print_procedure(*p);
  }
  return out.str();
}

}  // namespace ctgc
