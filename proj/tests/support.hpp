#pragma once

#include "ctgc/driver.hpp"
#include "ctgc/parser.hpp"

#include <memory>
#include <string>

namespace ctgc::test {

inline std::string bench_path(const std::string& file) { return std::string(CTGC_BENCH_DIR) + "/" + file; }
inline std::string bench_text(const std::string& file) { return read_file(bench_path(file)); }

/// A single module, parsed and analysed with default settings.
struct Analysed {
  Module m;
  SummaryTable summaries;
  AnalysisContext ctx;

  explicit Analysed(std::string_view text, std::optional<std::size_t> widen = 200) : m(parse_module(text)) {
    ctx.types = &m.type_table;
    ctx.decls = [this](const ProcId& id) -> const ProcDecl* {
      if (const ProcDecl* d = m.find_decl(id)) return d;
      return find_builtin(id);
    };
    ctx.widen_threshold = widen;
    summaries = analyse_module(m, ctx);
    ctx.summaries = &summaries;
  }
  Analysed(const Analysed&) = delete;

  const Procedure& proc(const std::string& name) const {
    for (const auto& p : m.procedures)
      if (p.decl.name == name) return p;
    throw Error("no procedure " + name);
  }
  VarId var(const std::string& proc_name, const std::string& v) const { return *proc(proc_name).find_var(v); }
  std::string names(const Procedure& p, const AliasSet& a) const {
    return to_string(a, [&p](VarId v) { return p.var_name(v); });
  }
  std::string summary(const std::string& name) const {
    const Procedure& p = proc(name);
    return to_string(summaries.at(p.id()).exit_aliases,
                     [&p](VarId v) { return p.var_name(p.head.at(static_cast<std::size_t>(v))); });
  }
  ModuleReuse decide(const std::string& constraint, const std::string& strategy = "lifo",
                     std::uint64_t seed = 0) const {
    ReuseOptions o;
    o.constraint = ReuseConstraint::parse(constraint);
    o.strategy = SelectionStrategy::parse(strategy, seed);
    return decide_module(m, ctx, {}, o);
  }
};

inline CompileResult compile_text(const std::string& text, const CtgcConfig& cfg = {}) {
  std::map<std::string, InterfaceFile> interfaces;
  return compile_sources({SourceFile{"test.m0", text}}, cfg, interfaces);
}

inline CompileResult compile_bench(const std::vector<std::string>& files, const CtgcConfig& cfg = {},
                                   bool iterate = true) {
  std::vector<SourceFile> sources;
  for (const auto& f : files) sources.push_back({bench_path(f), bench_text(f)});
  std::map<std::string, InterfaceFile> interfaces;
  return compile_sources(sources, cfg, interfaces, iterate);
}

inline CtgcConfig plain_config() {
  CtgcConfig c;
  c.ctgc = false;
  return c;
}

}  // namespace ctgc::test
