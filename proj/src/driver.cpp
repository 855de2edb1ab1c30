#include "ctgc/driver.hpp"

#include "ctgc/parser.hpp"
#include "ctgc/printer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace ctgc {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::uint64_t parse_uint(std::string_view text, const char* what) {
  std::uint64_t v = 0;
  if (text.empty()) throw Error(std::string("missing ") + what);
  for (char c : text) {
    if (c < '0' || c > '9') throw Error(std::string("bad ") + what + " '" + std::string(text) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string located(const std::string& path, const Error& e) {
  return path.empty() ? std::string(e.what()) : path + ":" + e.what();
}

}  // namespace

CtgcConfig CtgcConfig::parse(std::string_view text) {
  CtgcConfig c;
  for (const auto& part : split(text, '+')) {
    if (part == "no-ctgc") {
      c.ctgc = false;
    } else if (part == "lifo" || part == "random") {
      c.strategy = SelectionStrategy::parse(part);
    } else if (part == "cc" || part == "cache") {
      c.cache = true;
    } else if (part.rfind("seed=", 0) == 0) {
      c.seed = parse_uint(part.substr(5), "seed");
    } else if (part == "widen=off") {
      c.widen.reset();
    } else if (part.rfind("widen=", 0) == 0) {
      c.widen = parse_uint(part.substr(6), "widening threshold");
    } else {
      c.constraint = ReuseConstraint::parse(part);
    }
  }
  c.strategy.seed = c.seed;
  return c;
}

std::string CtgcConfig::str() const {
  std::string s = ctgc ? constraint.str() + "+" + (strategy.kind == SelectionStrategy::Kind::lifo ? "lifo" : "random")
                       : "no-ctgc";
  if (cache) s += "+cc";
  if (seed != 0) s += "+seed=" + std::to_string(seed);
  if (!widen) s += "+widen=off";
  else if (*widen != 200) s += "+widen=" + std::to_string(*widen);
  return s;
}

std::vector<std::string> dependency_order(
    const std::map<std::string, std::vector<std::string>>& imports) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    if (!seen.insert(n).second) return;
    auto it = imports.find(n);
    if (it == imports.end()) return;
    std::vector<std::string> deps = it->second;
    std::sort(deps.begin(), deps.end());
    for (const auto& d : deps)
      if (imports.count(d)) visit(d);
    out.push_back(n);
  };
  for (const auto& [n, deps] : imports) visit(n);
  return out;
}

namespace {

struct Unit {
  const SourceFile* file;
  std::string name;
  std::vector<std::string> imports;
};

/// What one module sees of its imports.
struct Visible {
  ImportContext ctx;
  std::map<ProcId, ProcDecl> decls;
  SummaryTable summaries;
  VersionTable versions;
  bool assumed_top = false;
};

}  // namespace

CompileResult compile_sources(const std::vector<SourceFile>& sources, const CtgcConfig& cfg,
                              std::map<std::string, InterfaceFile>& interfaces, bool iterate) {
  std::map<std::string, Unit> units;
  std::map<std::string, std::vector<std::string>> graph;
  for (const auto& s : sources) {
    Module head;
    try {
      head = parse_declarations(s.text);
    } catch (const Error& e) {
      throw CompileError(located(s.path, e));
    }
    if (units.count(head.name)) throw CompileError("module " + head.name + " given twice");
    units[head.name] = Unit{&s, head.name, head.imports};
    graph[head.name] = head.imports;
  }
  std::vector<std::string> order = dependency_order(graph);

  CompileResult result;
  std::set<std::string> warned;
  auto warn = [&](const std::string& w) {
    if (warned.insert(w).second) result.warnings.push_back(w);
  };
  ReuseOptions opts{cfg.constraint, cfg.strategy};
  opts.strategy.seed = cfg.seed;

  int max_rounds = iterate ? std::max(1, cfg.max_rounds) : 1;
  result.rounds = 1;
  for (int round = 1; round <= max_rounds; ++round) {
    result.rounds_run = round;
    std::map<std::string, CompiledModule> done;
    bool changed = false;
    bool any_top = false;
    for (const auto& name : order) {
      const Unit& u = units.at(name);
      Visible vis;
      for (const auto& imp : u.imports) {
        if (auto it = done.find(imp); it != done.end()) {
          vis.ctx.add_module(it->second.module);
          for (const auto& d : it->second.module.decls) vis.decls[d.id()] = d;
          for (const auto& [id, s] : it->second.summaries) vis.summaries[id] = s;
          for (const auto& [id, v] : it->second.reuse.versions) vis.versions[id] = v;
        } else if (auto f = interfaces.find(imp); f != interfaces.end()) {
          if (auto src = units.find(imp);
              src != units.end() && fnv1a_hex(src->second.file->text) != f->second.source_hash)
            warn("interface for module " + imp + " is stale (source changed since it was written)");
          Module sig;
          try {
            sig = f->second.signature();
          } catch (const Error& e) {
            throw CompileError("interface for module " + imp + ": " + e.what());
          }
          vis.ctx.add_module(sig);
          for (const auto& d : sig.decls) vis.decls[d.id()] = d;
          for (const auto& [id, s] : f->second.summaries()) vis.summaries[id] = s;
          for (const auto& [id, v] : f->second.versions()) vis.versions[id] = v;
        } else if (auto src = units.find(imp); src != units.end()) {
          Module decls = parse_declarations(src->second.file->text);
          vis.ctx.add_module(decls);
          for (const auto& d : decls.decls) vis.decls[d.id()] = d;
          vis.assumed_top = true;
          warn("no interface for module " + imp + " yet; its procedures are assumed Top");
        } else {
          throw CompileError(located(u.file->path, Error("no interface file for imported module " + imp)));
        }
      }
      any_top = any_top || vis.assumed_top;

      CompiledModule cm;
      cm.source = u.file->path;
      try {
        cm.module = parse_module(u.file->text, vis.ctx);
      } catch (const Error& e) {
        throw CompileError(located(u.file->path, e));
      }
      const Module& m = cm.module;
      AnalysisContext actx;
      actx.types = &m.type_table;
      const auto& vdecls = vis.decls;
      actx.decls = [&m, &vdecls](const ProcId& id) -> const ProcDecl* {
        if (const ProcDecl* d = m.find_decl(id)) return d;
        auto it = vdecls.find(id);
        if (it != vdecls.end()) return &it->second;
        return find_builtin(id);
      };
      actx.widen_threshold = cfg.widen;
      actx.summaries = &vis.summaries;
      cm.summaries = analyse_module(m, actx);
      cm.visible_summaries = vis.summaries;
      for (const auto& [id, s] : cm.summaries) cm.visible_summaries[id] = s;
      cm.visible_decls = vis.decls;
      actx.summaries = &cm.visible_summaries;
      if (cfg.ctgc) {
        cm.reuse = decide_module(m, actx, vis.versions, opts);
        cm.annotated = annotated_module(m, cm.reuse);
      } else {
        cm.annotated = m;
      }
      cm.interface = make_interface(m, u.file->text, cm.summaries, cm.reuse.versions);
      interface_text(cm.interface);
      auto prev = interfaces.find(name);
      if (prev == interfaces.end() || prev->second.content_hash != cm.interface.content_hash) {
        changed = true;
        result.rounds = round;
      }
      interfaces[name] = cm.interface;
      done[name] = std::move(cm);
    }
    result.modules.clear();
    for (const auto& name : order) result.modules.push_back(std::move(done.at(name)));
    if (!iterate) {
      result.converged = !any_top;
      break;
    }
    if (!changed) {
      result.converged = true;
      break;
    }
    if (round == max_rounds) {
      result.converged = false;
      result.warnings.push_back("no fixpoint after " + std::to_string(max_rounds) +
                                " rounds; keeping the last results");
    }
  }
  return result;
}

std::string archive_text(const CompiledModule& m) {
  std::map<ProcId, std::string> comments;
  for (const auto& [id, r] : m.reuse.procs) {
    for (const auto& v : r.versions) {
      if (v.kind != ProcVersion::Kind::reuse) continue;
      const Procedure* p = m.module.find_procedure(id);
      std::vector<std::string> heads;
      for (VarId h : p->head) heads.push_back(p->var_name(h));
      comments[ProcId{v.name, id.arity}] =
          "reuse version of " + id.str() + ", cond=" + condition_to_string(v.conditions, p->decl, heads);
    }
  }
  return print_module(m.annotated, comments);
}

std::string dump_text(const CompiledModule& m, const std::set<std::string>& what,
                      const CtgcConfig& cfg) {
  AnalysisContext actx;
  actx.types = &m.module.type_table;
  actx.decls = [&m](const ProcId& id) -> const ProcDecl* {
    if (const ProcDecl* d = m.module.find_decl(id)) return d;
    auto it = m.visible_decls.find(id);
    if (it != m.visible_decls.end()) return &it->second;
    return find_builtin(id);
  };
  actx.widen_threshold = cfg.widen;
  actx.summaries = &m.visible_summaries;
  std::ostringstream out;
  for (const auto& p : m.module.procedures) {
    out << "proc " << p.id().str() << "\n";
    auto name = [&p](VarId v) { return p.var_name(v); };
    BodyAnalysis a;
    if (what.count("alias") || what.count("dead")) a = analyse_body(p, actx);
    if (what.count("alias")) {
      for (int i = 0; i < p.point_count(); ++i)
        out << "alias p" << i << " " << to_string(a.after[static_cast<std::size_t>(i)], name) << "\n";
      std::vector<std::string> heads;
      for (VarId h : p.head) heads.push_back(p.var_name(h));
      auto s = m.summaries.find(p.id());
      if (s != m.summaries.end())
        out << "summary " << to_string(s->second.exit_aliases, [&heads](VarId v) {
          return heads.at(static_cast<std::size_t>(v));
        }) << "\n";
    }
    if (what.count("dead")) {
      Liveness live = compute_liveness(p);
      for (const auto& d : detect_dead_cells(p, a, live, *actx.types))
        out << dead_cell_to_string(p, d) << "\n";
    }
    if (what.count("reuse")) {
      auto r = m.reuse.procs.find(p.id());
      if (r != m.reuse.procs.end()) out << reuse_dump(p, r->second);
    }
  }
  return out.str();
}

Program program_of(const CompileResult& r) {
  Program prog;
  for (const auto& m : r.modules) prog.add_module(m.annotated);
  return prog;
}

Program program_from_texts(const std::vector<SourceFile>& files) {
  std::map<std::string, const SourceFile*> by_name;
  std::map<std::string, std::vector<std::string>> graph;
  std::map<std::string, Module> heads;
  for (const auto& f : files) {
    Module head;
    try {
      head = parse_declarations(f.text);
    } catch (const Error& e) {
      throw CompileError(located(f.path, e));
    }
    by_name[head.name] = &f;
    graph[head.name] = head.imports;
    heads[head.name] = std::move(head);
  }
  Program prog;
  std::map<std::string, Module> parsed;
  for (const auto& name : dependency_order(graph)) {
    ImportContext ctx;
    for (const auto& imp : graph[name]) {
      if (auto it = parsed.find(imp); it != parsed.end())
        ctx.add_module(it->second);
      else if (auto h = heads.find(imp); h != heads.end())
        ctx.add_module(h->second);
      else
        throw CompileError(located(by_name[name]->path, Error("imported module " + imp + " not given")));
    }
    try {
      parsed[name] = parse_module(by_name[name]->text, ctx);
    } catch (const Error& e) {
      throw CompileError(located(by_name[name]->path, e));
    }
    prog.add_module(parsed[name]);
  }
  return prog;
}

ProcId resolve_entry(const Program& prog, const std::string& name, bool prefer_reuse) {
  std::string base = name;
  std::optional<std::size_t> arity;
  if (auto slash = name.rfind('/'); slash != std::string::npos) {
    base = name.substr(0, slash);
    arity = parse_uint(name.substr(slash + 1), "arity");
  }
  std::vector<ProcId> found;
  for (const auto& [id, p] : prog.procs)
    if (id.name == base && (!arity || id.arity == *arity)) found.push_back(id);
  if (found.empty()) throw RuntimeError("unknown entry predicate " + name);
  if (found.size() > 1) throw RuntimeError("entry " + name + " is ambiguous; give name/arity");
  ProcId id = found.front();
  if (prefer_reuse) {
    ProcId r{id.name + "__r", id.arity};
    if (prog.find(r)) return r;
  }
  return id;
}

RunOptions run_options(const CtgcConfig& cfg) {
  RunOptions opts;
  opts.use_cache = cfg.cache && cfg.ctgc;
  return opts;
}

std::vector<Term> parse_args(const std::vector<std::string>& args) {
  std::vector<Term> out;
  for (const auto& a : args) out.push_back(parse_term(a));
  return out;
}

std::vector<BenchEntry> parse_manifest(std::string_view text, const std::filesystem::path& base) {
  std::vector<BenchEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string x; words >> x;) w.push_back(x);
    if (w.empty()) continue;
    if (w.size() < 3) throw Error("manifest line " + std::to_string(n) + ": expected 'name files entry args...'");
    BenchEntry e;
    e.name = w[0];
    for (const auto& f : split(w[1], ',')) {
      std::filesystem::path p(f);
      e.files.push_back((p.is_absolute() ? p : base / p).string());
    }
    e.entry = w[2];
    e.args.assign(w.begin() + 3, w.end());
    out.push_back(std::move(e));
  }
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

struct Measured {
  RunResult run;
  double seconds = 0;
};

Measured measure(const std::vector<SourceFile>& sources, const CtgcConfig& cfg, const BenchEntry& e) {
  std::map<std::string, InterfaceFile> interfaces;
  CompileResult r = compile_sources(sources, cfg, interfaces, sources.size() > 1);
  Program prog = program_of(r);
  ProcId entry = resolve_entry(prog, e.entry, cfg.ctgc);
  RunOptions opts = run_options(cfg);
  auto args = parse_args(e.args);
  auto t0 = std::chrono::steady_clock::now();
  Measured m;
  m.run = run_program(prog, entry, args, opts);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<BenchRow> run_bench(const std::vector<BenchEntry>& entries,
                                const std::vector<CtgcConfig>& configs) {
  std::vector<BenchRow> rows;
  for (const auto& e : entries) {
    std::vector<SourceFile> sources;
    std::optional<Measured> base;
    std::string base_error;
    try {
      for (const auto& f : e.files) sources.push_back({f, read_file(f)});
      CtgcConfig plain;
      plain.ctgc = false;
      base = measure(sources, plain, e);
    } catch (const Error& err) {
      base_error = std::string("baseline: ") + err.what();
    }
    for (const auto& cfg : configs) {
      BenchRow row;
      row.program = e.name;
      row.config = cfg.str();
      if (!base) {
        row.error = base_error;
        rows.push_back(std::move(row));
        continue;
      }
      try {
        Measured m = measure(sources, cfg, e);
        row.stats = m.run.stats;
        row.seconds = m.seconds;
        if (m.run.succeeded != base->run.succeeded || !(m.run.outputs == base->run.outputs)) {
          row.error = "output differs from the no-ctgc run";
        } else {
          row.ok = true;
          double b = static_cast<double>(base->run.stats.words_allocated);
          double w = static_cast<double>(m.run.stats.words_allocated);
          row.pct_vs_baseline = b == 0 ? 0 : (w - b) / b * 100.0;
        }
      } catch (const Error& err) {
        row.error = err.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "program,config,words,pct_vs_baseline,reused,cache_hits,leaked,seconds\n";
  for (const auto& r : rows) {
    out += r.program + "," + r.config + ",";
    if (r.ok) {
      out += std::to_string(r.stats.words_allocated) + "," + fixed(r.pct_vs_baseline, 2) + "," +
             std::to_string(r.stats.cells_reused_inplace) + "," + std::to_string(r.stats.cache_hits) +
             "," + std::to_string(r.stats.within_k_leaked_words) + "," + fixed(r.seconds, 4);
    } else {
      out += "FAIL,,,,,";
    }
    out += "\n";
  }
  return out;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"program", "config", "words", "% vs plain", "reused", "cache hits", "leaked", "seconds"}};
  for (const auto& r : rows) {
    if (r.ok)
      cells.push_back({r.program, r.config, std::to_string(r.stats.words_allocated),
                       fixed(r.pct_vs_baseline, 2), std::to_string(r.stats.cells_reused_inplace),
                       std::to_string(r.stats.cache_hits), std::to_string(r.stats.within_k_leaked_words),
                       fixed(r.seconds, 4)});
    else
      cells.push_back({r.program, r.config, "FAIL: " + r.error});
  }
  std::vector<std::size_t> width(8, 0);
  for (const auto& row : cells)
    if (row.size() == 8)
      for (std::size_t i = 0; i < 8; ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      line += row[i];
      if (i + 1 < row.size()) line.append(width[i] - std::min(width[i], row[i].size()), ' ');
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace ctgc
