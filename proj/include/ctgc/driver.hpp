#pragma once

#include "ctgc/interface.hpp"
#include "ctgc/reuse.hpp"
#include "ctgc/runtime.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ctgc {

struct CtgcConfig {
  ReuseConstraint constraint;
  SelectionStrategy strategy;
  std::optional<std::size_t> widen = 200;
  bool cache = false;
  bool ctgc = true;
  std::uint64_t seed = 0;
  int max_rounds = 5;

  /// Bench notation: `no-ctgc`, or `+`-joined parts among a constraint,
  /// `lifo`, `random`, `cc` (cell cache), `seed=N`, `widen=N|off`.
  static CtgcConfig parse(std::string_view text);
  std::string str() const;
};

struct SourceFile {
  std::string path;
  std::string text;
};

struct CompiledModule {
  std::string source;
  Module module;
  SummaryTable summaries;
  ModuleReuse reuse;
  Module annotated;
  InterfaceFile interface;
  /// What the module was analysed against: imported declarations and the
  /// summaries of imported and own procedures.
  std::map<ProcId, ProcDecl> visible_decls;
  SummaryTable visible_summaries;
};

struct CompileResult {
  std::vector<CompiledModule> modules;  // dependency order
  std::vector<std::string> warnings;
  /// Last round that changed an interface (at least 1).
  int rounds = 1;
  int rounds_run = 1;
  bool converged = true;
};

/// Module names ordered so that imports come first where possible.
std::vector<std::string> dependency_order(
    const std::map<std::string, std::vector<std::string>>& imports);

/// Compiles a set of modules. `interfaces` holds interface files already
/// on disk (by module name); they are consulted for imports and updated.
/// With `iterate`, whole rounds are repeated until no interface changes
/// or `cfg.max_rounds` is reached.
CompileResult compile_sources(const std::vector<SourceFile>& sources, const CtgcConfig& cfg,
                              std::map<std::string, InterfaceFile>& interfaces,
                              bool iterate = false);

/// Annotated core-language text; conditions of reuse versions as comments.
std::string archive_text(const CompiledModule& m);

/// `what` holds any of "alias", "dead", "reuse".
std::string dump_text(const CompiledModule& m, const std::set<std::string>& what,
                      const CtgcConfig& cfg);

Program program_of(const CompileResult& r);
/// Parses annotated archives (or any core-language modules) into a program.
Program program_from_texts(const std::vector<SourceFile>& files);

/// Procedure named `name` (any arity); its reuse version when `prefer_reuse`
/// and one exists.
ProcId resolve_entry(const Program& prog, const std::string& name, bool prefer_reuse);

/// Runtime options for a configuration; the cell cache needs the reuse pass.
RunOptions run_options(const CtgcConfig& cfg);

std::vector<Term> parse_args(const std::vector<std::string>& args);

struct BenchEntry {
  std::string name;
  std::vector<std::string> files;
  std::string entry;
  std::vector<std::string> args;
};

/// Lines `name file[,file...] entry arg...`; `#` starts a comment.
/// Relative files are resolved against `base`.
std::vector<BenchEntry> parse_manifest(std::string_view text, const std::filesystem::path& base);

struct BenchRow {
  std::string program;
  std::string config;
  bool ok = false;
  std::string error;
  RuntimeStats stats;
  double pct_vs_baseline = 0;
  double seconds = 0;
};

std::vector<BenchRow> run_bench(const std::vector<BenchEntry>& entries,
                                const std::vector<CtgcConfig>& configs);
std::string bench_csv(const std::vector<BenchRow>& rows);
std::string bench_table(const std::vector<BenchRow>& rows);

std::string read_file(const std::filesystem::path& p);

}  // namespace ctgc
