// Acceptance gate: one PASS/FAIL line per criterion.
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace ctgc;
using namespace ctgc::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

RunResult run_files(const std::vector<std::string>& files, const CtgcConfig& cfg, const std::string& entry,
                    const std::vector<std::string>& args) {
  CompileResult r = compile_bench(files, cfg);
  Program prog = program_of(r);
  return run_program(prog, resolve_entry(prog, entry, cfg.ctgc), parse_args(args), run_options(cfg));
}

std::string range(int n) { return "[1.." + std::to_string(n) + "]"; }

// Cons cells are two words; [] is a constant. nrev of n elements builds one
// singleton per element and append copies its first argument.
std::uint64_t nrev_words(std::uint64_t n) {
  std::uint64_t cells = 0;
  for (std::uint64_t k = 0; k < n; ++k) cells += 1 + k;
  return 2 * cells;
}

// Quicksort of an ascending list: every partition puts the whole rest in Gs,
// and each pivot is consed onto the accumulator.
std::uint64_t sorted_qsort_words(std::uint64_t n) {
  std::uint64_t cells = 0;
  for (std::uint64_t k = n; k > 0; --k) cells += (k - 1) + 1;
  return 2 * cells;
}

Outcome savings(const std::string& file, const std::string& entry, int n, std::uint64_t oracle,
                double limit) {
  RunResult plain = run_files({file}, CtgcConfig::parse("no-ctgc"), entry, {range(n)});
  auto t0 = Clock::now();
  RunResult reuse = run_files({file}, CtgcConfig::parse("match+lifo"), entry, {range(n)});
  double secs = seconds_since(t0);
  double base = static_cast<double>(plain.stats.words_allocated);
  double pct = base > 0 ? 100.0 * (base - static_cast<double>(reuse.stats.words_allocated)) / base : 0;
  Outcome o;
  o.pass = plain.succeeded && reuse.succeeded && plain.outputs == reuse.outputs &&
           plain.stats.words_allocated == oracle && pct >= 98.0 && secs < limit;
  o.detail = "plain=" + std::to_string(plain.stats.words_allocated) + " oracle=" + std::to_string(oracle) +
             " reuse=" + std::to_string(reuse.stats.words_allocated) + fmt(" reduction=%.2f%%", pct) +
             fmt(" time=%.2fs", secs);
  return o;
}

std::string reuse_dump_of(const Analysed& an, const ModuleReuse& r, const std::string& name) {
  const Procedure& p = an.proc(name);
  return reuse_dump(p, r.procs.at(p.id()));
}

Outcome convert2_goldens() {
  Analysed an(bench_text("convert.m0"));
  const std::map<std::string, std::string> expected{
      {"match",
       "reuse c@p7 Field2 <- d@p5 List0 ([|]/2, cond={List0})\n"
       "call p8 convert2/2 -> convert2__r (cond={List0^([|],2), List0^([|],2).T(list(field1))})\n"
       "version convert2/2: plain convert2\n"
       "version convert2/2: reuse convert2__r cond={List0, List0^([|],2), List0^([|],2).T(list(field1))}\n"},
      {"within:1",
       "reuse c@p7 Field2 <- d@p6 Field1 (field1/3, cond={List0^([|],1)})\n"
       "reuse c@p9 List <- d@p5 List0 ([|]/2, cond={List0})\n"
       "call p8 convert2/2 -> convert2__r (cond={List0^([|],2), List0^([|],2).([|],1), "
       "List0^([|],2).T(list(field1))})\n"
       "version convert2/2: plain convert2\n"
       "version convert2/2: reuse convert2__r cond={List0, List0^([|],1), List0^([|],2), "
       "List0^([|],2).([|],1), List0^([|],2).T(list(field1))}\n"},
      {"same-cons",
       "reuse c@p9 List <- d@p5 List0 ([|]/2, cond={List0})\n"
       "call p8 convert2/2 -> convert2__r (cond={List0^([|],2), List0^([|],2).T(list(field1))})\n"
       "version convert2/2: plain convert2\n"
       "version convert2/2: reuse convert2__r cond={List0, List0^([|],2), List0^([|],2).T(list(field1))}\n"}};
  Outcome o{true, ""};
  for (const auto& [constraint, want] : expected) {
    ReuseOptions opts;
    opts.constraint = ReuseConstraint::parse(constraint);
    ModuleReuse r = decide_module(an.m, an.ctx, {}, opts);
    std::string got = reuse_dump_of(an, r, "convert2");
    if (got != want) {
      o.pass = false;
      o.detail += constraint + " dump differs:\n" + got;
    }
  }
  if (o.pass) o.detail = "match, within:1 and same-cons dumps match";
  return o;
}

Outcome indirect_reuse() {
  Analysed an(bench_text("convert.m0"));
  ReuseOptions opts;
  ModuleReuse r = decide_module(an.m, an.ctx, {}, opts);
  std::string c1 = reuse_dump_of(an, r, "convert1");
  std::string gen = reuse_dump_of(an, r, "generate");
  bool ok = c1 ==
                "reuse c@p3 Y1 <- d@p2 X1 (a/2, cond={X^(b,1)})\n"
                "reuse c@p4 Y <- d@p1 X (b/1, cond={X})\n"
                "version convert1/2: plain convert1\n"
                "version convert1/2: reuse convert1__r cond={X, X^(b,1)}\n" &&
            gen ==
                "call p2 convert1/2 -> convert1__r (cond={})\n"
                "version generate/1: plain generate\n";
  // The reuse version of convert1 does what the dump promises when run.
  CtgcConfig cfg;
  RunResult run = run_files({"convert.m0"}, cfg, "generate", {});
  ok = ok && run.succeeded && to_string(run.outputs.at(0)) == "b(a(3, north))" &&
       run.stats.cells_reused_inplace == 2;
  return {ok, ok ? "convert1__r cond={X, X^(b,1)}; generate calls it with cond={}"
                 : "dumps:\n" + c1 + gen + "run: " + run.stats.str()};
}

const char* kTree =
    ":- module tree.\n"
    ":- type tree ---> e ; two(int, tree, tree) ; three(int, int, tree, tree, tree).\n"
    ":- pred build(tree, tree).\n"
    ":- mode build(in, out) is det.\n"
    "build(A, V) :-\n"
    "    T <= two(0, e, e),\n"
    "    A1 := A,\n"
    "    V <= three(2, 3, T, A, A1).\n";

// A foreign predicate relating every leaf position of X to the same position
// of Y, followed by straight-line code that keeps the sharing live.
std::string stress_module(int width, int tail) {
  auto fields = [&](const char* t) {
    std::string s;
    for (int i = 0; i < width; ++i) s += std::string(i ? ", " : "") + t;
    return s;
  };
  std::ostringstream out;
  out << ":- module stress.\n"
      << ":- type t0 ---> a(" << fields("t1") << ").\n"
      << ":- type t1 ---> b(" << fields("t2") << ").\n"
      << ":- type t2 ---> c(" << fields("t3") << ").\n"
      << ":- type t3 ---> l(int).\n"
      << ":- foreign_pred mk(t0, t0).\n:- mode mk(in, out) is det.\n"
      << ":- foreign_alias mk(X, Y) {";
  bool first = true;
  for (int i = 1; i <= width; ++i)
    for (int j = 1; j <= width; ++j)
      for (int k = 1; k <= width; ++k) {
        std::string path = "(a," + std::to_string(i) + ").(b," + std::to_string(j) + ").(c," +
                           std::to_string(k) + ")";
        out << (first ? "" : ", ") << "alias(X^" << path << ", Y^" << path << ")";
        first = false;
      }
  out << "}.\n"
      << ":- pred s(t0, int, t0, int).\n:- mode s(in, in, out, out) is det.\n"
      << "s(X, N0, Y, N" << tail << ") :-\n    mk(X, Y),\n    Y => a(";
  for (int i = 1; i <= width; ++i) out << (i > 1 ? ", " : "") << "Y" << i;
  out << ")";
  for (int i = 1; i <= tail; ++i) out << ",\n    int_add(N" << i - 1 << ", 1, N" << i << ")";
  out << ".\n";
  return out.str();
}

Outcome widening() {
  Analysed an(kTree);
  const Procedure& p = an.proc("build");
  BodyAnalysis body = analyse_body(p, an.ctx);
  const Goal* v = nullptr;
  for_each_goal(p.body, [&](const Goal& g) {
    if (g.kind == Goal::Kind::construct && p.var_name(g.lhs) == "V") v = &g;
  });
  VarId vid = *p.find_var("V");
  AliasSet internal;
  for (const auto& pr : body.after.at(static_cast<std::size_t>(v->point)).pairs())
    if (pr.first.var == vid && pr.second.var == vid) internal.insert(pr);
  TypeEnv env = p.type_env(an.m.type_table);
  VarNamer name = [&p](VarId x) { return p.var_name(x); };
  std::string before = to_string(internal, name);
  std::string widened = to_string(widen_alias(internal, env), name);

  // The integer positions (three,1), (three,2) and (three,3).(two,1) share
  // one type selector once widened.
  TypeEnv ienv{&an.m.type_table, {TypeExpr("tree"), TypeExpr("int")}};
  VarResolver res = [](const std::string& n) -> std::optional<VarId> {
    if (n == "V") return 0;
    if (n == "W") return 1;
    return std::nullopt;
  };
  VarNamer inames = [](VarId x) { return std::string(x == 0 ? "V" : "W"); };
  AliasSet ints =
      parse_alias_set("{alias(V^(three,1), W), alias(V^(three,2), W), alias(V^(three,3).(two,1), W)}", res, ienv);
  std::string ints_widened = to_string(widen_alias(ints, ienv), inames);

  bool golden = before == "{alias(V^(three,4), V^(three,5))}" && widened == "{alias(V^T(tree), V^T(tree))}" &&
                ints_widened == "{alias(V^T(int), W)}";

  // Stress: 1000 field-path pairs through a foreign summary.
  std::string text = stress_module(10, 50);
  Module sm = parse_module(text);
  std::size_t synthetic = 0;
  if (const ProcDecl* d = sm.find_decl({"mk", 2}); d && d->foreign_alias)
    for (const auto& pr : d->foreign_alias->aliases.pairs())
      if (!pr.first.path.empty() && !pr.second.path.empty()) ++synthetic;
  auto t0 = Clock::now();
  Analysed widened_run(text, 200);
  double with = seconds_since(t0);
  t0 = Clock::now();
  Analysed precise_run(text, std::nullopt);
  double without = seconds_since(t0);
  bool fast = synthetic >= 1000 && with * 10.0 <= without;

  std::string detail = "tree: " + widened + ", ints: " + ints_widened + "; stress pairs=" +
                       std::to_string(synthetic) + fmt(" widen=200 %.3fs", with) + fmt(" widen=off %.3fs", without) +
                       fmt(" speedup=%.1fx", with > 0 ? without / with : 0);
  if (!golden) detail += "; unexpected tree set " + before;
  return {golden && fast, detail};
}

Outcome cell_cache() {
  RunResult off = run_files({"temporaries.m0"}, CtgcConfig::parse("match+lifo"), "run", {"1000"});
  RunResult on = run_files({"temporaries.m0"}, CtgcConfig::parse("match+lifo+cc"), "run", {"1000"});
  RunResult plain = run_files({"temporaries.m0"}, CtgcConfig::parse("no-ctgc"), "run", {"1000"});
  const RuntimeStats& s = on.stats;
  bool conserved = plain.stats.words_allocated == s.words_allocated + s.words_reused_inplace + s.words_from_cache;
  bool ok = on.succeeded && off.succeeded && on.outputs == off.outputs && on.outputs == plain.outputs &&
            s.words_allocated < off.stats.words_allocated && s.cache_hits > 0 && conserved;
  return {ok, "words off=" + std::to_string(off.stats.words_allocated) + " on=" + std::to_string(s.words_allocated) +
                  " hits=" + std::to_string(s.cache_hits) + (conserved ? " conservation holds" : " conservation FAILS")};
}

Outcome soundness() {
  auto entries = parse_manifest(bench_text("suite.txt"), CTGC_BENCH_DIR);
  const std::vector<std::string> configs{"match+lifo",      "within:1+lifo", "within:2+random+seed=3",
                                         "same-cons+lifo", "match+lifo+cc", "within:1+random+seed=9+cc"};
  int runs = 0, checked_dead = 0;
  std::vector<std::string> failures;
  for (const auto& e : entries) {
    std::vector<SourceFile> sources;
    for (const auto& f : e.files) sources.push_back({f, read_file(f)});
    auto compile = [&](const CtgcConfig& cfg) {
      std::map<std::string, InterfaceFile> interfaces;
      return compile_sources(sources, cfg, interfaces, true);
    };
    CompileResult plain = compile(plain_config());
    Program plain_prog = program_of(plain);
    std::vector<Term> args = parse_args(e.args);
    RunResult base = run_program(plain_prog, resolve_entry(plain_prog, e.entry, false), args, RunOptions{});
    for (const auto& c : configs) {
      CtgcConfig cfg = CtgcConfig::parse(c);
      try {
        CompileResult r = compile(cfg);
        Program prog = program_of(r);
        RunOptions opts = run_options(cfg);
        opts.debug_checks = true;
        RunResult got = run_program(prog, resolve_entry(prog, e.entry, true), args, opts);
        ++runs;
        if (got.succeeded != base.succeeded || got.outputs != base.outputs)
          failures.push_back(e.name + " " + c + ": outputs differ");
        const RuntimeStats& s = got.stats;
        if (base.stats.words_allocated != s.words_allocated + s.words_reused_inplace + s.words_from_cache)
          failures.push_back(e.name + " " + c + ": words not conserved");
      } catch (const std::exception& ex) {
        failures.push_back(e.name + " " + c + ": " + ex.what());
      }
    }
    // Cells the analysis declares dead without conditions are never read again.
    CompileResult r = compile(CtgcConfig{});
    std::set<std::pair<ProcId, ProgramPoint>> dead;
    for (const auto& m : r.modules)
      for (const auto& [id, pr] : m.reuse.procs)
        for (const auto& d : pr.dead)
          if (d.condition.empty()) dead.insert({id, d.decon_point});
    ReadAfterReport rep = read_after_oracle(plain_prog, resolve_entry(plain_prog, e.entry, false), args);
    for (const auto& x : rep.entries) {
      if (!dead.count({x.event.proc, x.event.point})) continue;
      ++checked_dead;
      if (x.read_later)
        failures.push_back(e.name + ": dead cell of " + x.event.proc.str() + " p" + std::to_string(x.event.point) +
                           " read later");
    }
  }
  std::string detail = std::to_string(runs) + " differential runs, " + std::to_string(checked_dead) +
                       " unconditional dead cells checked";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty() && runs > 0, detail};
}

Outcome convergence() {
  std::vector<SourceFile> sources{{"moda.m0", bench_text("moda.m0")}, {"modb.m0", bench_text("modb.m0")}};
  std::map<std::string, InterfaceFile> round1;
  compile_sources(sources, CtgcConfig{}, round1);
  std::vector<std::pair<std::string, ProcId>> tops;
  for (const auto& [mod, f] : round1)
    for (const auto& [id, s] : f.summaries())
      if (s.exit_aliases.is_top()) tops.push_back({mod, id});

  std::map<std::string, InterfaceFile> fresh;
  CompileResult it = compile_sources(sources, CtgcConfig{}, fresh, true);
  bool refined = !tops.empty();
  for (const auto& [mod, id] : tops) {
    const AliasSet& now = fresh.at(mod).summaries().at(id).exit_aliases;
    refined = refined && !now.is_top();
  }
  bool ok = it.converged && it.rounds_run <= 3 && refined;
  return {ok, "converged=" + std::string(it.converged ? "yes" : "no") + " rounds=" + std::to_string(it.rounds) +
                  " rounds_run=" + std::to_string(it.rounds_run) + " round-1 Top entries=" +
                  std::to_string(tops.size()) + (refined ? " all refined" : " not refined")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"nrev savings", [] { return savings("nrev.m0", "nrev", 100, nrev_words(100), 5.0); }},
      {"qsort savings", [] { return savings("qsort.m0", "sort", 500, sorted_qsort_words(500), 10.0); }},
      {"convert2 decisions", convert2_goldens},
      {"conditional and indirect reuse", indirect_reuse},
      {"type widening", widening},
      {"cell cache", cell_cache},
      {"soundness suite", soundness},
      {"iteration convergence", convergence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu %-32s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
  }
  std::printf("criterion 9 %-32s NOTE  absolute table percentages and wall-clock speedups are not reproduced; "
              "criteria 3-6 check the same effects\n",
              "not reproducible");
  return failed == 0 ? 0 : 1;
}
