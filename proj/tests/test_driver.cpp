#include "support.hpp"

#include <doctest.h>

using namespace ctgc;
using namespace ctgc::test;

namespace {

std::vector<SourceFile> mutual() {
  return {{"moda.m0", bench_text("moda.m0")}, {"modb.m0", bench_text("modb.m0")}};
}

const std::string kC =
    ":- module c.\n:- type list(T) ---> [] ; [T | list(T)].\n"
    ":- pred wrap(list(int), list(int)).\n:- mode wrap(in, out) is det.\n"
    "wrap(Xs, Ys) :-\n    Ys <= [0 | Xs].\n";
const std::string kB =
    ":- module b.\n:- import c.\n"
    ":- pred wrap2(list(int), list(int)).\n:- mode wrap2(in, out) is det.\n"
    "wrap2(Xs, Ys) :-\n    wrap(Xs, Zs),\n    wrap(Zs, Ys).\n";
const std::string kA =
    ":- module a.\n:- import b.\n"
    ":- pred top(list(int), list(int)).\n:- mode top(in, out) is det.\n"
    "top(Xs, Ys) :-\n    wrap2(Xs, Ys).\n";

std::string without_seconds(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("configuration names") {
  CHECK(CtgcConfig{}.str() == "match+lifo");
  for (const char* s : {"no-ctgc", "match+lifo", "within:2+lifo", "same-cons+random+seed=4", "match+lifo+cc",
                        "within:1+lifo+widen=off", "match+lifo+widen=50"})
    CHECK(CtgcConfig::parse(s).str() == s);
  CtgcConfig c = CtgcConfig::parse("random+within:3+seed=7+cache");
  CHECK(c.constraint.kind == ReuseConstraint::Kind::within_k);
  CHECK(c.constraint.k == 3);
  CHECK(c.strategy.kind == SelectionStrategy::Kind::random);
  CHECK(c.strategy.seed == 7);
  CHECK(c.cache);
  CHECK_THROWS_AS(CtgcConfig::parse("match+fifo"), Error);
  CHECK_THROWS_AS(CtgcConfig::parse("seed=x"), Error);

  CHECK_FALSE(run_options(CtgcConfig::parse("no-ctgc+cc")).use_cache);
  CHECK(run_options(CtgcConfig::parse("match+cc")).use_cache);
}

TEST_CASE("dependency order") {
  CHECK(dependency_order({{"a", {"b"}}, {"b", {"c"}}, {"c", {}}}) == std::vector<std::string>{"c", "b", "a"});
  CHECK(dependency_order({{"x", {"lib"}}, {"y", {}}}) == std::vector<std::string>{"x", "y"});
  auto cyc = dependency_order({{"moda", {"modb"}}, {"modb", {"moda"}}});
  CHECK(cyc.size() == 2);
  CHECK(cyc == dependency_order({{"modb", {"moda"}}, {"moda", {"modb"}}}));
}

TEST_CASE("a single module needs one round") {
  std::map<std::string, InterfaceFile> interfaces;
  CompileResult r = compile_sources({{"convert.m0", bench_text("convert.m0")}}, CtgcConfig{}, interfaces, true);
  CHECK(r.converged);
  CHECK(r.rounds == 1);
  CHECK(r.rounds_run == 2);
  CHECK(r.warnings.empty());
  CHECK(interfaces.count("convert"));
}

TEST_CASE("a chain given in reverse order converges at once") {
  std::map<std::string, InterfaceFile> interfaces;
  CompileResult r = compile_sources({{"c.m0", kC}, {"b.m0", kB}, {"a.m0", kA}}, CtgcConfig{}, interfaces, true);
  CHECK(r.converged);
  CHECK(r.rounds <= 2);
  CHECK(r.warnings.empty());
  REQUIRE(r.modules.size() == 3);
  CHECK(r.modules[0].module.name == "c");
  CHECK(r.modules[2].module.name == "a");
  CHECK(to_string(interfaces.at("a").summaries().at({"top", 2}).exit_aliases,
                  [](VarId v) { return v == 0 ? std::string("Xs") : std::string("Ys"); }) ==
        "{alias(Xs^T(list(int)), Ys^([|],2).T(list(int)))}");

  // Separately, in order, each module reads the interface of the one before.
  std::map<std::string, InterfaceFile> step;
  for (const auto& [file, text] : std::vector<std::pair<std::string, std::string>>{{"c.m0", kC}, {"b.m0", kB}, {"a.m0", kA}}) {
    CompileResult s = compile_sources({{file, text}}, CtgcConfig{}, step);
    CHECK(s.warnings.empty());
  }
  for (auto& [name, f] : step) CHECK(interface_text(f) == interface_text(interfaces.at(name)));
}

TEST_CASE("mutually dependent modules converge and refine the first round") {
  std::map<std::string, InterfaceFile> interfaces;
  CompileResult first = compile_sources(mutual(), CtgcConfig{}, interfaces);
  REQUIRE(first.modules.size() == 2);
  const std::string early = first.modules[0].module.name;
  const std::string late = first.modules[1].module.name;
  CHECK(first.warnings.size() == 1);
  CHECK(first.warnings.at(0) == "no interface for module " + late + " yet; its procedures are assumed Top");

  // Procedures of the early module that call into the late one are Top.
  const ProcId caller = early == "moda" ? ProcId{"double_rev", 2} : ProcId{"rev_double", 2};
  CHECK(interfaces.at(early).summaries().at(caller).exit_aliases.is_top());
  std::map<std::string, std::string> hashes;
  for (auto& [n, f] : interfaces) hashes[n] = f.content_hash;

  CompileResult second = compile_sources(mutual(), CtgcConfig{}, interfaces);
  CHECK(second.warnings.empty());
  const AliasSet& refined = interfaces.at(early).summaries().at(caller).exit_aliases;
  CHECK_FALSE(refined.is_top());
  CHECK(refined.empty());
  CHECK(interfaces.at(early).content_hash != hashes[early]);

  std::map<std::string, std::string> after2;
  for (auto& [n, f] : interfaces) after2[n] = f.content_hash;
  compile_sources(mutual(), CtgcConfig{}, interfaces);
  for (auto& [n, f] : interfaces) CHECK(f.content_hash == after2[n]);

  std::map<std::string, InterfaceFile> fresh;
  CompileResult it = compile_sources(mutual(), CtgcConfig{}, fresh, true);
  CHECK(it.converged);
  CHECK(it.rounds == 2);
  CHECK(it.rounds_run == 3);
  for (auto& [n, f] : fresh) CHECK(f.content_hash == after2[n]);
}

TEST_CASE("iteration stops at the round limit with a warning") {
  CtgcConfig cfg;
  cfg.max_rounds = 1;
  std::map<std::string, InterfaceFile> interfaces;
  CompileResult r = compile_sources(mutual(), cfg, interfaces, true);
  CHECK_FALSE(r.converged);
  CHECK(r.rounds_run == 1);
  CHECK(r.warnings.back() == "no fixpoint after 1 rounds; keeping the last results");
}

TEST_CASE("interfaces are identical across runs") {
  std::map<std::string, InterfaceFile> x, y;
  compile_sources(mutual(), CtgcConfig{}, x, true);
  compile_sources(mutual(), CtgcConfig{}, y, true);
  for (auto& [n, f] : x) CHECK(interface_text(f) == interface_text(y.at(n)));
}

TEST_CASE("archives run like the compiled program") {
  for (const char* cfg : {"match+lifo", "within:1+lifo", "no-ctgc"}) {
    CtgcConfig c = CtgcConfig::parse(cfg);
    CompileResult r = compile_bench({"convert.m0"}, c);
    Program direct = program_of(r);
    std::vector<SourceFile> archives;
    for (const auto& m : r.modules) archives.push_back({m.module.name + ".m0a", archive_text(m)});
    Program loaded = program_from_texts(archives);
    std::vector<Term> in = parse_args({"[field1(1,2,3),field1(4,5,6)]"});
    RunResult a = run_program(direct, resolve_entry(direct, "convert2", c.ctgc), in, run_options(c));
    RunResult b = run_program(loaded, resolve_entry(loaded, "convert2", c.ctgc), in, run_options(c));
    CHECK(a.outputs == b.outputs);
    CHECK(a.stats.str() == b.stats.str());
  }
  CompileResult r = compile_bench({"convert.m0"});
  std::string text = archive_text(r.modules.at(0));
  CHECK(text.find("% reuse version of convert1/2, cond={X, X^(b,1)}") != std::string::npos);
  CHECK(text.find("@reuse(p5)") != std::string::npos);
}

TEST_CASE("entry resolution") {
  Program prog = program_of(compile_bench({"convert.m0"}));
  CHECK(resolve_entry(prog, "convert1", false) == ProcId{"convert1", 2});
  CHECK(resolve_entry(prog, "convert1", true) == ProcId{"convert1__r", 2});
  CHECK(resolve_entry(prog, "convert1/2", true) == ProcId{"convert1__r", 2});
  CHECK(resolve_entry(prog, "generate", true) == ProcId{"generate", 1});
  CHECK_THROWS_AS(resolve_entry(prog, "convert1/3", false), RuntimeError);
  CHECK_THROWS_AS(resolve_entry(prog, "nope", false), RuntimeError);
}

TEST_CASE("argument terms") {
  auto t = parse_args({"[1..4]", "b(a(3,east))", "7"});
  REQUIRE(t.size() == 3);
  CHECK(to_string(t[0]) == "[1, 2, 3, 4]");
  CHECK(to_string(t[1]) == "b(a(3, east))");
  CHECK(to_string(t[2]) == "7");
  CHECK_THROWS_AS(parse_args({"b(a(3,"}), Error);
}

TEST_CASE("manifests") {
  auto entries = parse_manifest("# comment\n\nx  one.m0,/abs/two.m0  go  [1..3]  5  # trailing\ny a.m0 main\n",
                                "/base");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].name == "x");
  CHECK(entries[0].files == std::vector<std::string>{"/base/one.m0", "/abs/two.m0"});
  CHECK(entries[0].entry == "go");
  CHECK(entries[0].args == std::vector<std::string>{"[1..3]", "5"});
  CHECK(entries[1].args.empty());
  CHECK_THROWS_WITH_AS(parse_manifest("ok a.m0 go\nbad a.m0\n", "."), doctest::Contains("line 2"), Error);
}

TEST_CASE("bench rows are deterministic apart from timing") {
  auto entries = parse_manifest(bench_text("suite.txt"), CTGC_BENCH_DIR);
  std::vector<CtgcConfig> configs{CtgcConfig::parse("no-ctgc"), CtgcConfig::parse("match+lifo"),
                                  CtgcConfig::parse("within:1+random+seed=5+cc")};
  auto a = run_bench(entries, configs);
  auto b = run_bench(entries, configs);
  CHECK(a.size() == entries.size() * configs.size());
  for (const auto& r : a) {
    INFO(r.program << " " << r.config << " " << r.error);
    CHECK(r.ok);
  }
  CHECK(without_seconds(bench_csv(a)) == without_seconds(bench_csv(b)));
  std::string csv = bench_csv(a);
  CHECK(csv.rfind("program,config,words,pct_vs_baseline,reused,cache_hits,leaked,seconds\n", 0) == 0);
  CHECK(csv.find("\nnrev,no-ctgc,10100,0.00,0,0,0,") != std::string::npos);
  CHECK(csv.find("\nnrev,match+lifo,0,-100.00,5050,0,0,") != std::string::npos);

  std::vector<BenchEntry> broken{{"missing", {"/nonexistent/x.m0"}, "go", {}}};
  auto rows = run_bench(broken, configs);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK_FALSE(r.ok);
  CHECK(bench_csv(rows).find("missing,no-ctgc,FAIL,,,,,") != std::string::npos);
}

TEST_CASE("dumps") {
  CompileResult r = compile_bench({"convert.m0"});
  std::string d = dump_text(r.modules.at(0), {"alias", "dead", "reuse"}, CtgcConfig{});
  CHECK(d.find("proc convert1/2\n") != std::string::npos);
  CHECK(d.find("alias p1 {alias(X1, X^(b,1))}\n") != std::string::npos);
  CHECK(d.find("dead p1 X b/1 size=1 cond={X}\n") != std::string::npos);
  CHECK(d.find("reuse c@p7 Field2 <- d@p5 List0 ([|]/2, cond={List0})\n") != std::string::npos);
  std::string only_dead = dump_text(r.modules.at(0), {"dead"}, CtgcConfig{});
  CHECK(only_dead.find("alias p") == std::string::npos);
  CHECK(only_dead.find("reuse c@") == std::string::npos);
}
