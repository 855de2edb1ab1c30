#include "ctgc/parser.hpp"

#include "ctgc/modecheck.hpp"

#include <cctype>
#include <set>

namespace ctgc {

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind { atom, var, integer, punct, end };
  Kind kind = Kind::end;
  std::string text;
  std::int64_t value = 0;
  int line = 0;
  int col = 0;
  std::size_t offset = 0;
};

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view src) {
  static const char* const puncts[] = {"--->", ":-", "=>", "<=", ":=", "==", "->", "\\+", "(",
                                       ")",    "[",  "]",  "|",  ",",  ";",  ".",  "@",  "{",
                                       "}",    "^",  "=",  "<",  ">",  "*",  "+",  "-",  "/",
                                       "\"",   "'"};
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '%') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    t.offset = i;
    bool negative_int = false;
    if (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
      if (out.empty() || (out.back().kind == Token::Kind::punct &&
                          (out.back().text == "(" || out.back().text == "," ||
                           out.back().text == "[" || out.back().text == "|" ||
                           out.back().text == "<=" || out.back().text == "=>")))
        negative_int = true;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || negative_int) {
      std::size_t start = i;
      advance(1);
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      t.kind = Token::Kind::integer;
      t.text = std::string(src.substr(start, i - start));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::exception&) {
        throw ParseError(t.line, t.col, "integer literal out of range");
      }
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < src.size() && is_ident_char(src[i])) advance(1);
      t.text = std::string(src.substr(start, i - start));
      t.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Token::Kind::var
                                                                         : Token::Kind::atom;
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* p : puncts) {
      std::string_view pv(p);
      if (src.substr(i, pv.size()) == pv) {
        t.kind = Token::Kind::punct;
        t.text = std::string(pv);
        advance(pv.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(line, col, std::string("unexpected character '") + c + "'");
  }
  Token end;
  end.kind = Token::Kind::end;
  end.line = line;
  end.col = col;
  end.offset = src.size();
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Raw syntax

struct RawArg {
  enum class Kind { var, anon, integer, constant };
  Kind kind = Kind::var;
  std::string name;
  std::int64_t value = 0;
};

struct RawGoal {
  Goal::Kind kind = Goal::Kind::conj;
  int line = 0;
  int col = 0;
  std::string lhs;
  std::string rhs;
  std::string functor;
  std::optional<std::int64_t> int_value;
  std::vector<RawArg> args;
  std::string callee;
  std::vector<RawGoal> goals;
  std::optional<ProgramPoint> reuse_of;
  bool cacheable = false;
};

struct RawClause {
  std::string name;
  std::vector<std::string> head;
  RawGoal body;
  int line = 0;
  int col = 0;
};

struct RawPred {
  std::string name;
  std::vector<TypeExpr> types;
  bool foreign = false;
  int line = 0;
  int col = 0;
};

struct RawMode {
  std::string name;
  std::vector<Mode> modes;
  Determinism det = Determinism::det;
  int line = 0;
  int col = 0;
};

struct RawForeignAlias {
  std::string name;
  std::vector<std::string> head;
  std::string text;
  int line = 0;
  int col = 0;
};

struct RawModule {
  std::string name;
  std::vector<std::string> imports;
  std::vector<TypeDef> types;
  std::vector<RawPred> preds;
  std::vector<RawMode> modes;
  std::vector<RawForeignAlias> foreign_aliases;
  std::vector<RawClause> clauses;
};

class SyntaxParser {
public:
  SyntaxParser(std::string_view src, bool declarations_only)
      : src_(src), toks_(lex(src)), decls_only_(declarations_only) {}

  RawModule parse() {
    RawModule m;
    if (!(is_punct(":-") && peek(1).kind == Token::Kind::atom && peek(1).text == "module"))
      error(cur(), "expected ':- module <name>.' header");
    next();
    next();
    m.name = expect_atom("module name");
    expect_punct(".");
    while (cur().kind != Token::Kind::end) {
      if (is_punct(":-")) {
        parse_directive(m);
      } else if (decls_only_) {
        skip_clause();
      } else {
        m.clauses.push_back(parse_clause());
      }
    }
    return m;
  }

  Term parse_term_literal() {
    Term t = term_literal();
    if (cur().kind != Token::Kind::end) error(cur(), "trailing input after term");
    return t;
  }

private:
  // -- token helpers
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_punct(std::string_view p) const {
    return cur().kind == Token::Kind::punct && cur().text == p;
  }
  bool is_atom(std::string_view a) const {
    return cur().kind == Token::Kind::atom && cur().text == a;
  }
  [[noreturn]] void error(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, msg);
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) {
      std::string got = cur().kind == Token::Kind::end ? "end of input" : "'" + cur().text + "'";
      error(cur(), "expected '" + std::string(p) + "' but found " + got);
    }
    next();
  }
  std::string expect_atom(const char* what) {
    if (cur().kind != Token::Kind::atom) error(cur(), std::string("expected ") + what);
    return next().text;
  }

  void skip_clause() {
    while (cur().kind != Token::Kind::end && !is_punct(".")) next();
    expect_punct(".");
  }

  // -- directives
  void parse_directive(RawModule& m) {
    const Token start = next();  // ':-'
    std::string kw = expect_atom("a declaration keyword");
    if (kw == "module") error(start, "duplicate module header");
    if (kw == "import" || kw == "import_module") {
      m.imports.push_back(expect_atom("module name"));
      while (is_punct(",")) {
        next();
        m.imports.push_back(expect_atom("module name"));
      }
      expect_punct(".");
    } else if (kw == "type") {
      m.types.push_back(parse_typedef());
    } else if (kw == "pred" || kw == "foreign_pred") {
      RawPred p;
      p.line = cur().line;
      p.col = cur().col;
      p.foreign = kw == "foreign_pred";
      p.name = expect_atom("predicate name");
      if (is_punct("(")) {
        next();
        p.types.push_back(parse_type());
        while (is_punct(",")) {
          next();
          p.types.push_back(parse_type());
        }
        expect_punct(")");
      }
      expect_punct(".");
      m.preds.push_back(std::move(p));
    } else if (kw == "mode") {
      RawMode md;
      md.line = cur().line;
      md.col = cur().col;
      md.name = expect_atom("predicate name");
      if (is_punct("(")) {
        next();
        for (;;) {
          const Token& t = cur();
          std::string mode = expect_atom("mode 'in' or 'out'");
          if (mode == "in" || mode == "di")
            md.modes.push_back(Mode::in);
          else if (mode == "out" || mode == "uo")
            md.modes.push_back(Mode::out);
          else
            error(t, "unknown mode '" + mode + "'");
          if (!is_punct(",")) break;
          next();
        }
        expect_punct(")");
      }
      if (!is_atom("is")) error(cur(), "expected 'is <determinism>'");
      next();
      const Token& dt = cur();
      std::string det = expect_atom("determinism");
      if (det == "det")
        md.det = Determinism::det;
      else if (det == "semidet")
        md.det = Determinism::semidet;
      else
        error(dt, "unsupported determinism '" + det + "' (only det and semidet)");
      expect_punct(".");
      m.modes.push_back(std::move(md));
    } else if (kw == "foreign_alias") {
      RawForeignAlias fa;
      fa.line = cur().line;
      fa.col = cur().col;
      fa.name = expect_atom("predicate name");
      if (is_punct("(")) {
        next();
        for (;;) {
          if (cur().kind != Token::Kind::var) error(cur(), "expected a head variable");
          fa.head.push_back(next().text);
          if (!is_punct(",")) break;
          next();
        }
        expect_punct(")");
      }
      if (!is_punct("{")) error(cur(), "expected '{' starting the alias annotation");
      std::size_t begin = cur().offset;
      int depth = 0;
      for (;;) {
        if (cur().kind == Token::Kind::end) error(cur(), "unterminated alias annotation");
        if (is_punct("{")) ++depth;
        if (is_punct("}")) {
          --depth;
          if (depth == 0) {
            std::size_t end = cur().offset + 1;
            fa.text = std::string(src_.substr(begin, end - begin));
            next();
            break;
          }
        }
        next();
      }
      expect_punct(".");
      m.foreign_aliases.push_back(std::move(fa));
    } else if (kw == "typeclass" || kw == "instance") {
      error(start, "typeclasses are not supported");
    } else {
      error(start, "unknown declaration ':- " + kw + "'");
    }
  }

  TypeExpr parse_type() {
    const Token& t = cur();
    if (t.kind == Token::Kind::var) return TypeExpr{next().text};
    if (t.kind != Token::Kind::atom) error(t, "expected a type");
    if (t.text == "pred" || t.text == "func") error(t, "higher-order types are not supported");
    TypeExpr out{next().text};
    if (is_punct("(")) {
      next();
      out.args.push_back(parse_type());
      while (is_punct(",")) {
        next();
        out.args.push_back(parse_type());
      }
      expect_punct(")");
    }
    return out;
  }

  TypeDef parse_typedef() {
    TypeDef def;
    def.name = expect_atom("type name");
    if (is_punct("(")) {
      next();
      for (;;) {
        if (cur().kind != Token::Kind::var) error(cur(), "expected a type parameter");
        def.params.push_back(next().text);
        if (!is_punct(",")) break;
        next();
      }
      expect_punct(")");
    }
    expect_punct("--->");
    for (;;) {
      Alternative alt;
      if (is_punct("[")) {
        next();
        if (is_punct("]")) {
          next();
          alt.functor = "[]";
        } else {
          alt.functor = "[|]";
          alt.args.push_back(parse_type());
          expect_punct("|");
          alt.args.push_back(parse_type());
          expect_punct("]");
        }
      } else {
        alt.functor = expect_atom("a functor");
        if (is_punct("(")) {
          next();
          alt.args.push_back(parse_type());
          while (is_punct(",")) {
            next();
            alt.args.push_back(parse_type());
          }
          expect_punct(")");
        }
      }
      def.alternatives.push_back(std::move(alt));
      if (!is_punct(";")) break;
      next();
    }
    expect_punct(".");
    return def;
  }

  // -- clauses
  RawClause parse_clause() {
    RawClause c;
    c.line = cur().line;
    c.col = cur().col;
    if (cur().kind == Token::Kind::var) error(cur(), "clause head must start with a predicate name");
    c.name = expect_atom("predicate name");
    if (is_punct("(")) {
      next();
      for (;;) {
        if (cur().kind != Token::Kind::var || cur().text == "_")
          error(cur(), "clause head arguments must be distinct variables");
        c.head.push_back(next().text);
        if (!is_punct(",")) break;
        next();
      }
      expect_punct(")");
    }
    c.body.kind = Goal::Kind::conj;
    c.body.line = cur().line;
    c.body.col = cur().col;
    if (is_punct(":-")) {
      next();
      c.body = parse_conj();
    }
    if (is_punct("=")) error(cur(), "clause heads may not be followed by '='");
    expect_punct(".");
    return c;
  }

  RawGoal parse_conj() {
    RawGoal conj;
    conj.kind = Goal::Kind::conj;
    conj.line = cur().line;
    conj.col = cur().col;
    for (;;) {
      RawGoal g = parse_goal();
      if (g.kind == Goal::Kind::conj) {
        for (auto& x : g.goals) conj.goals.push_back(std::move(x));
      } else {
        conj.goals.push_back(std::move(g));
      }
      if (!is_punct(",")) break;
      next();
    }
    return conj;
  }

  RawGoal parse_goal() {
    const Token& t = cur();
    if (is_punct("(")) {
      next();
      std::vector<RawGoal> branches;
      branches.push_back(parse_conj());
      if (is_punct("->")) error(cur(), "if-then-else is not supported");
      while (is_punct(";")) {
        next();
        branches.push_back(parse_conj());
        if (is_punct("->")) error(cur(), "if-then-else is not supported");
      }
      expect_punct(")");
      if (branches.size() == 1) return std::move(branches[0]);
      RawGoal d;
      d.kind = Goal::Kind::disj;
      d.line = t.line;
      d.col = t.col;
      d.goals = std::move(branches);
      return d;
    }
    if (is_punct("\\+")) error(t, "negation is not supported");
    if (t.kind == Token::Kind::atom) {
      if (t.text == "true" && !(peek(1).kind == Token::Kind::punct && peek(1).text == "(")) {
        next();
        RawGoal g;
        g.kind = Goal::Kind::conj;
        g.line = t.line;
        g.col = t.col;
        return g;
      }
      if (t.text == "call" || t.text == "apply")
        error(t, "higher-order calls are not supported");
      RawGoal g;
      g.kind = Goal::Kind::call;
      g.line = t.line;
      g.col = t.col;
      g.callee = next().text;
      if (is_punct("(")) {
        next();
        for (;;) {
          g.args.push_back(parse_plain_arg(false));
          if (!is_punct(",")) break;
          next();
        }
        expect_punct(")");
      }
      return g;
    }
    if (t.kind == Token::Kind::var) {
      if (t.text == "_") error(t, "'_' cannot start a goal");
      const Token& op = peek(1);
      if (op.kind != Token::Kind::punct) error(op, "expected '==', ':=', '<=' or '=>'");
      RawGoal g;
      g.line = t.line;
      g.col = t.col;
      g.lhs = t.text;
      if (op.text == "==" || op.text == ":=") {
        next();
        next();
        if (cur().kind != Token::Kind::var || cur().text == "_")
          error(cur(), "'" + op.text + "' takes a variable on the right (non-normalized unification)");
        g.kind = op.text == "==" ? Goal::Kind::test : Goal::Kind::assign;
        g.rhs = next().text;
        return g;
      }
      if (op.text == "<=" || op.text == "=>") {
        next();
        next();
        g.kind = op.text == "<=" ? Goal::Kind::construct : Goal::Kind::deconstruct;
        parse_unif_term(g);
        parse_annotation(g);
        return g;
      }
      if (op.text == "=") error(op, "general unification '=' is not normalized; use ==, :=, <= or =>");
      if (op.text == "(") error(t, "higher-order calls are not supported");
      error(op, "expected '==', ':=', '<=' or '=>'");
    }
    error(t, "expected a goal");
  }

  // Construct args: variable, integer or constant. Deconstruct args:
  // variable or '_'. Call args: variable, integer or constant.
  RawArg parse_plain_arg(bool decon) {
    const Token& t = cur();
    RawArg a;
    if (t.kind == Token::Kind::var) {
      a.kind = t.text == "_" ? RawArg::Kind::anon : RawArg::Kind::var;
      if (a.kind == RawArg::Kind::anon && !decon) error(t, "'_' is only allowed in deconstructions");
      a.name = next().text;
      return a;
    }
    if (decon) error(t, "deconstruction arguments must be variables (non-normalized term)");
    if (t.kind == Token::Kind::integer) {
      a.kind = RawArg::Kind::integer;
      a.value = next().value;
      return a;
    }
    if (t.kind == Token::Kind::atom) {
      if (peek(1).kind == Token::Kind::punct && peek(1).text == "(")
        error(t, "nested compound term (non-normalized)");
      a.kind = RawArg::Kind::constant;
      a.name = next().text;
      return a;
    }
    if (is_punct("[") && peek(1).kind == Token::Kind::punct && peek(1).text == "]") {
      next();
      next();
      a.kind = RawArg::Kind::constant;
      a.name = "[]";
      return a;
    }
    if (is_punct("[")) error(t, "nested list term (non-normalized)");
    error(t, "expected an argument");
  }

  void parse_unif_term(RawGoal& g) {
    const bool decon = g.kind == Goal::Kind::deconstruct;
    const Token& t = cur();
    if (t.kind == Token::Kind::integer) {
      g.int_value = next().value;
      return;
    }
    if (t.kind == Token::Kind::var)
      error(t, "use ':=' or '==' between two variables");
    if (is_punct("[")) {
      next();
      if (is_punct("]")) {
        next();
        g.functor = "[]";
        return;
      }
      g.functor = "[|]";
      g.args.push_back(parse_plain_arg(decon));
      if (is_punct(",")) error(cur(), "use [Head | Tail] in normalized list terms");
      expect_punct("|");
      g.args.push_back(parse_plain_arg(decon));
      expect_punct("]");
      return;
    }
    g.functor = expect_atom("a functor");
    if (is_punct("(")) {
      next();
      for (;;) {
        g.args.push_back(parse_plain_arg(decon));
        if (!is_punct(",")) break;
        next();
      }
      expect_punct(")");
    }
  }

  void parse_annotation(RawGoal& g) {
    if (!is_punct("@")) return;
    const Token& at = next();
    std::string what = expect_atom("an annotation");
    if (what == "cacheable") {
      if (g.kind != Goal::Kind::deconstruct) error(at, "only deconstructions can be cacheable");
      g.cacheable = true;
    } else if (what == "reuse") {
      if (g.kind != Goal::Kind::construct) error(at, "only constructions can reuse a cell");
      expect_punct("(");
      const Token& pt = cur();
      std::string p = expect_atom("a program point pN");
      if (p.size() < 2 || p[0] != 'p' ||
          !std::all_of(p.begin() + 1, p.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        error(pt, "expected a program point pN");
      g.reuse_of = std::stoi(p.substr(1));
      expect_punct(")");
    } else {
      error(at, "unknown annotation '" + what + "'");
    }
  }

  Term term_literal() {
    const Token& t = cur();
    if (t.kind == Token::Kind::integer) return Term::integer(next().value);
    if (is_punct("[")) {
      next();
      if (is_punct("]")) {
        next();
        return Term::make("[]");
      }
      std::vector<Term> elems;
      elems.push_back(term_literal());
      if (is_punct(".") && peek(1).kind == Token::Kind::punct && peek(1).text == ".") {
        next();
        next();
        if (!elems[0].is_integer || cur().kind != Token::Kind::integer)
          error(cur(), "ranges need integer bounds");
        std::int64_t hi = next().value;
        expect_punct("]");
        Term list = Term::make("[]");
        for (std::int64_t v = hi; v >= elems[0].value; --v)
          list = Term::make("[|]", {Term::integer(v), std::move(list)});
        return list;
      }
      while (is_punct(",")) {
        next();
        elems.push_back(term_literal());
      }
      Term tail = Term::make("[]");
      if (is_punct("|")) {
        next();
        tail = term_literal();
      }
      expect_punct("]");
      for (auto it = elems.rbegin(); it != elems.rend(); ++it)
        tail = Term::make("[|]", {std::move(*it), std::move(tail)});
      return tail;
    }
    if (t.kind != Token::Kind::atom) error(t, "expected a ground term");
    Term out = Term::make(next().text);
    if (is_punct("(")) {
      next();
      for (;;) {
        out.args.push_back(term_literal());
        if (!is_punct(",")) break;
        next();
      }
      expect_punct(")");
    }
    return out;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool decls_only_;
};

// ---------------------------------------------------------------------------
// Elaboration

std::optional<TypeExpr> merge_types(const TypeExpr& a, const TypeExpr& b) {
  if (a.is_variable()) return b;
  if (b.is_variable()) return a;
  if (a.name != b.name || a.args.size() != b.args.size()) return std::nullopt;
  TypeExpr out{a.name};
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    auto m = merge_types(a.args[i], b.args[i]);
    if (!m) return std::nullopt;
    out.args.push_back(std::move(*m));
  }
  return out;
}

std::string where(int line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

class Elaborator {
public:
  Elaborator(const RawModule& raw, const ImportContext& imports)
      : raw_(raw), imports_(imports) {}

  Module run(bool with_clauses) {
    Module m;
    m.name = raw_.name;
    m.imports = raw_.imports;
    m.types = raw_.types;
    m.type_table = imports_.types;
    for (const auto& t : raw_.types) {
      try {
        m.type_table.add(t);
      } catch (const TypeError& e) {
        throw CompileError(e.what());
      }
    }
    for (const auto& t : raw_.types) {
      for (const auto& alt : t.alternatives)
        for (const auto& a : alt.args) {
          try {
            m.type_table.check_wellformed(a, t.params);
          } catch (const TypeError& e) {
            throw CompileError("in type '" + t.name + "': " + e.what());
          }
        }
    }
    build_decls(m);
    if (!with_clauses) return m;

    std::set<ProcId> defined;
    for (const auto& c : raw_.clauses) {
      ProcId id{c.name, c.head.size()};
      const ProcDecl* d = m.find_decl(id);
      if (d == nullptr)
        throw CompileError(where(c.line, "clause for undeclared predicate " + id.str()));
      if (d->foreign)
        throw CompileError(where(c.line, "foreign predicate " + id.str() + " cannot have clauses"));
      if (!defined.insert(id).second)
        throw CompileError(where(c.line, "duplicate predicate/mode: second clause for " + id.str() +
                                             " (use a disjunction)"));
      m.procedures.push_back(elaborate_clause(m, *d, c));
    }
    for (const auto& d : m.decls)
      if (!d.foreign && !defined.count(d.id()))
        throw CompileError("no clause for predicate " + d.id().str());
    return m;
  }

private:
  void build_decls(Module& m) {
    std::map<ProcId, const RawMode*> modes;
    for (const auto& md : raw_.modes) {
      ProcId id{md.name, md.modes.size()};
      if (!modes.emplace(id, &md).second)
        throw CompileError(where(md.line, "duplicate predicate/mode: " + id.str() +
                                              " has more than one mode"));
    }
    std::set<ProcId> seen;
    for (const auto& p : raw_.preds) {
      ProcDecl d;
      d.name = p.name;
      d.arg_types = p.types;
      d.foreign = p.foreign;
      ProcId id = d.id();
      if (!seen.insert(id).second || find_builtin(id) != nullptr)
        throw CompileError(where(p.line, "duplicate predicate/mode: " + id.str()));
      if (imports_.decls.count(id))
        throw CompileError(where(p.line, "duplicate predicate/mode: " + id.str() +
                                             " is also declared by an imported module"));
      for (const auto& t : d.arg_types) {
        try {
          m.type_table.check_wellformed(t, {});
        } catch (const TypeError& e) {
          throw CompileError(where(p.line, "in declaration of " + id.str() + ": " + e.what()));
        }
      }
      auto it = modes.find(id);
      if (it == modes.end()) throw CompileError(where(p.line, "no mode declared for " + id.str()));
      d.arg_modes = it->second->modes;
      d.determinism = it->second->det;
      modes.erase(it);
      m.decls.push_back(std::move(d));
    }
    if (!modes.empty()) {
      const RawMode* md = modes.begin()->second;
      throw CompileError(where(md->line, "mode declared for undeclared predicate " +
                                             modes.begin()->first.str()));
    }
    for (const auto& fa : raw_.foreign_aliases) {
      ProcId id{fa.name, fa.head.size()};
      ProcDecl* d = nullptr;
      for (auto& x : m.decls)
        if (x.id() == id) d = &x;
      if (d == nullptr || !d->foreign)
        throw CompileError(where(fa.line, "alias annotation for non-foreign predicate " + id.str()));
      if (d->foreign_alias)
        throw CompileError(where(fa.line, "duplicate alias annotation for " + id.str()));
      ForeignAlias annot;
      annot.head_names = fa.head;
      annot.text = fa.text;
      TypeEnv env = Procedure::head_env(*d, m.type_table);
      VarResolver resolve = [&](const std::string& n) -> std::optional<VarId> {
        for (std::size_t i = 0; i < fa.head.size(); ++i)
          if (fa.head[i] == n) return static_cast<VarId>(i);
        return std::nullopt;
      };
      try {
        annot.aliases = parse_alias_set(fa.text, resolve, env);
        for (const auto& p : annot.aliases.pairs()) {
          normalize_path(p.first, env);
          normalize_path(p.second, env);
        }
      } catch (const Error& e) {
        throw CompileError(where(fa.line, "in alias annotation of " + id.str() + ": " + e.what()));
      }
      d->foreign_alias = std::move(annot);
    }
  }

  const ProcDecl* lookup_decl(const Module& m, const ProcId& id) const {
    if (const ProcDecl* d = m.find_decl(id)) return d;
    auto it = imports_.decls.find(id);
    if (it != imports_.decls.end()) return &it->second;
    return find_builtin(id);
  }

  struct ClauseState {
    Procedure proc;
    std::map<std::string, VarId> names;
    int anon = 0;
    int line = 0;
  };

  VarId var_of(ClauseState& st, const std::string& name) {
    auto it = st.names.find(name);
    if (it != st.names.end()) return it->second;
    VarId id = static_cast<VarId>(st.proc.vars.size());
    st.proc.vars.push_back(Variable{name, TypeExpr{}});
    st.names.emplace(name, id);
    return id;
  }

  VarId fresh_var(ClauseState& st) {
    std::string name;
    do {
      name = "_" + std::to_string(++st.anon);
    } while (st.names.count(name));
    return var_of(st, name);
  }

  Goal convert(ClauseState& st, const RawGoal& r) {
    Goal g;
    g.kind = r.kind;
    g.line = r.line;
    g.functor = r.functor;
    g.int_value = r.int_value;
    g.callee = r.callee;
    g.reuse_of = r.reuse_of;
    g.cacheable = r.cacheable;
    if (!r.lhs.empty()) g.lhs = var_of(st, r.lhs);
    if (!r.rhs.empty()) g.rhs = var_of(st, r.rhs);
    std::set<VarId> distinct;
    for (const auto& a : r.args) {
      Arg arg;
      switch (a.kind) {
        case RawArg::Kind::var:
          arg = Arg::of_var(var_of(st, a.name));
          break;
        case RawArg::Kind::anon:
          arg = Arg::of_var(fresh_var(st));
          break;
        case RawArg::Kind::integer:
          arg = Arg::of_literal(Literal{Literal::Kind::integer, a.value, {}});
          break;
        case RawArg::Kind::constant:
          arg = Arg::of_literal(Literal{Literal::Kind::constant, 0, a.name});
          break;
      }
      if (arg.is_var() && !distinct.insert(arg.var).second)
        throw CompileError(where(r.line, "arguments must be distinct variables (non-normalized): " +
                                             st.proc.var_name(arg.var) + " repeated"));
      g.args.push_back(std::move(arg));
    }
    if ((g.kind == Goal::Kind::construct || g.kind == Goal::Kind::deconstruct) &&
        distinct.count(g.lhs))
      throw CompileError(where(r.line, "variable " + st.proc.var_name(g.lhs) +
                                           " occurs on both sides of a unification"));
    for (const auto& c : r.goals) {
      Goal child = convert(st, c);
      if (g.kind == Goal::Kind::disj) {
        if (child.kind == Goal::Kind::conj && child.goals.empty())
          throw CompileError(where(c.line, "empty disjunction branch"));
        if (child.kind == Goal::Kind::conj && child.goals.size() == 1)
          child = std::move(child.goals[0]);
        const Goal& first = child.kind == Goal::Kind::conj ? child.goals[0] : child;
        if (!first.is_atomic())
          throw CompileError(where(c.line, "a disjunction branch must start with an atomic goal"));
      }
      g.goals.push_back(std::move(child));
    }
    return g;
  }

  static void number(Goal& g, int& next) {
    g.point = next++;
    for (auto& c : g.goals) number(c, next);
  }

  Procedure elaborate_clause(const Module& m, const ProcDecl& decl, const RawClause& c) {
    ClauseState st;
    st.proc.decl = decl;
    st.proc.line = c.line;
    for (const auto& h : c.head) {
      if (st.names.count(h))
        throw CompileError(where(c.line, "clause head arguments must be distinct variables"));
      st.proc.head.push_back(var_of(st, h));
    }
    Goal body = convert(st, c.body);
    if (body.kind == Goal::Kind::conj && body.goals.size() == 1) body = std::move(body.goals[0]);
    st.proc.body = std::move(body);
    int next = 0;
    number(st.proc.body, next);
    infer_types(m, st);
    DeclLookup lookup = [&](const ProcId& id) { return lookup_decl(m, id); };
    if (auto err = check_well_modedness(st.proc, lookup)) {
      const Goal* g = st.proc.goal_at(err->point);
      throw CompileError(where(g ? g->line : c.line, "mode error in " + decl.id().str() + ": " +
                                                         err->message));
    }
    return std::move(st.proc);
  }

  // -- type inference
  void infer_types(const Module& m, ClauseState& st) {
    Procedure& p = st.proc;
    std::vector<bool> known(p.vars.size(), false);
    for (std::size_t i = 0; i < p.head.size(); ++i) {
      p.vars[static_cast<std::size_t>(p.head[i])].type = p.decl.arg_types[i];
      known[static_cast<std::size_t>(p.head[i])] = true;
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for_each_goal(p.body, [&](const Goal& g) {
        if (infer_goal(m, p, known, g, false)) changed = true;
      });
    }
    for (std::size_t i = 0; i < p.vars.size(); ++i)
      if (!known[i])
        throw CompileError(where(p.line, "cannot infer the type of variable " + p.vars[i].name +
                                             " in " + p.decl.id().str()));
    for_each_goal(p.body, [&](const Goal& g) { infer_goal(m, p, known, g, true); });
  }

  bool refine(Procedure& p, std::vector<bool>& known, VarId v, const TypeExpr& t, int line) {
    auto& var = p.vars[static_cast<std::size_t>(v)];
    if (!known[static_cast<std::size_t>(v)]) {
      var.type = t;
      known[static_cast<std::size_t>(v)] = true;
      return true;
    }
    auto merged = merge_types(var.type, t);
    if (!merged)
      throw CompileError(where(line, "type error: " + var.name + " has type " + var.type.str() +
                                         " but is used as " + t.str()));
    if (*merged != var.type) {
      var.type = std::move(*merged);
      return true;
    }
    return false;
  }

  void check_literal(const Module& m, const Literal& lit, const TypeExpr& expected, int line) {
    if (expected.is_variable()) return;
    if (lit.kind == Literal::Kind::integer) {
      if (expected.name != "int" && expected.name != "char")
        throw CompileError(where(line, "type error: integer literal used as " + expected.str()));
      return;
    }
    const TypeDef* def = m.type_table.find(expected.name);
    const Alternative* alt = def ? def->find(lit.functor) : nullptr;
    if (alt == nullptr || alt->arity() != 0)
      throw CompileError(where(line, "type error: '" + lit.functor + "' is not a constant of type " +
                                         expected.str()));
  }

  bool infer_goal(const Module& m, Procedure& p, std::vector<bool>& known, const Goal& g,
                  bool final_check) {
    auto is_known = [&](VarId v) { return known[static_cast<std::size_t>(v)]; };
    auto type_of = [&](VarId v) -> const TypeExpr& { return p.vars[static_cast<std::size_t>(v)].type; };
    bool changed = false;
    switch (g.kind) {
      case Goal::Kind::test:
      case Goal::Kind::assign:
        if (is_known(g.lhs)) changed |= refine(p, known, g.rhs, type_of(g.lhs), g.line);
        if (is_known(g.rhs)) changed |= refine(p, known, g.lhs, type_of(g.rhs), g.line);
        break;
      case Goal::Kind::construct:
      case Goal::Kind::deconstruct: {
        if (g.int_value) {
          changed |= refine(p, known, g.lhs, TypeExpr{"int"}, g.line);
          if (final_check && type_of(g.lhs).name != "int" && type_of(g.lhs).name != "char")
            throw CompileError(where(g.line, "type error: integer literal unified with " +
                                                 type_of(g.lhs).str()));
          break;
        }
        const TypeDef* def = nullptr;
        if (is_known(g.lhs) && !type_of(g.lhs).is_variable()) {
          const TypeExpr& t = type_of(g.lhs);
          def = m.type_table.find(t.name);
          if (def == nullptr)
            throw CompileError(where(g.line, "type error: " + t.str() + " has no functor '" +
                                                 g.functor + "'"));
        } else {
          auto cands = m.type_table.types_with_functor(g.functor, g.args.size());
          if (cands.empty())
            throw CompileError(where(g.line, "unknown functor " + g.functor + "/" +
                                                 std::to_string(g.args.size())));
          if (cands.size() > 1) {
            if (final_check)
              throw CompileError(where(g.line, "ambiguous functor " + g.functor));
            break;
          }
          def = cands[0];
        }
        const Alternative* alt = def->find(g.functor);
        if (alt == nullptr || alt->arity() != g.args.size())
          throw CompileError(where(g.line, "type error: " + g.functor + "/" +
                                               std::to_string(g.args.size()) +
                                               " is not a functor of type " + def->name));
        TypeSubst subst;
        TypeExpr self = def->self_type();
        if (is_known(g.lhs)) match_type(self, type_of(g.lhs), subst);
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          const Arg& a = g.args[i];
          if (a.is_var()) {
            if (is_known(a.var) && !match_type(alt->args[i], type_of(a.var), subst))
              throw CompileError(where(g.line, "type error: argument " + std::to_string(i + 1) +
                                                   " of " + g.functor + " has type " +
                                                   type_of(a.var).str()));
          } else if (a.literal->kind == Literal::Kind::integer) {
            match_type(alt->args[i], TypeExpr{"int"}, subst);
          } else {
            auto owners = m.type_table.types_with_functor(a.literal->functor, 0);
            if (owners.size() == 1 && owners[0]->params.empty())
              match_type(alt->args[i], owners[0]->self_type(), subst);
          }
        }
        changed |= refine(p, known, g.lhs, substitute(self, subst), g.line);
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          const Arg& a = g.args[i];
          TypeExpr at = substitute(alt->args[i], subst);
          if (a.is_var())
            changed |= refine(p, known, a.var, at, g.line);
          else if (final_check)
            check_literal(m, *a.literal, at, g.line);
        }
        break;
      }
      case Goal::Kind::call: {
        const ProcDecl* d = lookup_decl(m, g.callee_id());
        if (d == nullptr) throw CompileError(where(g.line, "unknown predicate " + g.callee_id().str()));
        for (std::size_t i = 0; i < g.args.size(); ++i) {
          const Arg& a = g.args[i];
          if (a.is_var())
            changed |= refine(p, known, a.var, d->arg_types[i], g.line);
          else if (final_check)
            check_literal(m, *a.literal, d->arg_types[i], g.line);
        }
        break;
      }
      case Goal::Kind::conj:
      case Goal::Kind::disj:
        break;
    }
    return changed;
  }

  const RawModule& raw_;
  const ImportContext& imports_;
};

}  // namespace

void ImportContext::add_module(const Module& m) {
  for (const auto& t : m.types) types.add(t);
  for (const auto& [name, def] : m.type_table.all()) types.add(def);
  for (const auto& d : m.decls) decls[d.id()] = d;
}

Module parse_module(std::string_view text, const ImportContext& imports) {
  RawModule raw = SyntaxParser(text, false).parse();
  return Elaborator(raw, imports).run(true);
}

Module parse_declarations(std::string_view text) {
  RawModule raw = SyntaxParser(text, true).parse();
  // Declarations may mention types of imported modules; accept them
  // unchecked here, the full elaboration validates them later.
  Module m;
  m.name = raw.name;
  m.imports = raw.imports;
  m.types = raw.types;
  for (const auto& t : raw.types) m.type_table.add(t);
  std::map<ProcId, const RawMode*> modes;
  for (const auto& md : raw.modes) modes[ProcId{md.name, md.modes.size()}] = &md;
  for (const auto& p : raw.preds) {
    ProcDecl d;
    d.name = p.name;
    d.arg_types = p.types;
    d.foreign = p.foreign;
    auto it = modes.find(d.id());
    if (it == modes.end()) throw CompileError(where(p.line, "no mode declared for " + d.id().str()));
    d.arg_modes = it->second->modes;
    d.determinism = it->second->det;
    m.decls.push_back(std::move(d));
  }
  return m;
}

Module parse_signature(std::string_view text) {
  RawModule raw = SyntaxParser(text, true).parse();
  ImportContext none;
  return Elaborator(raw, none).run(false);
}

Term Term::integer(std::int64_t v) {
  Term t;
  t.is_integer = true;
  t.value = v;
  return t;
}

Term Term::make(std::string functor, std::vector<Term> args) {
  Term t;
  t.functor = std::move(functor);
  t.args = std::move(args);
  return t;
}

bool operator==(const Term& a, const Term& b) {
  if (a.is_integer != b.is_integer) return false;
  if (a.is_integer) return a.value == b.value;
  return a.functor == b.functor && a.args == b.args;
}

Term parse_term(std::string_view text) {
  SyntaxParser p(text, false);
  return p.parse_term_literal();
}

std::string to_string(const Term& t) {
  if (t.is_integer) return std::to_string(t.value);
  if (t.functor == "[|]" && t.args.size() == 2) {
    std::string out = "[";
    const Term* cur = &t;
    bool first = true;
    while (cur->functor == "[|]" && cur->args.size() == 2 && !cur->is_integer) {
      if (!first) out += ", ";
      first = false;
      out += to_string(cur->args[0]);
      cur = &cur->args[1];
    }
    if (!(cur->functor == "[]" && !cur->is_integer)) out += " | " + to_string(*cur);
    return out + "]";
  }
  std::string out = t.functor;
  if (!t.args.empty()) {
    out += "(";
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) out += ", ";
      out += to_string(t.args[i]);
    }
    out += ")";
  }
  return out;
}

}  // namespace ctgc
