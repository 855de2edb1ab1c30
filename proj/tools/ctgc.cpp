#include "ctgc/driver.hpp"
#include "ctgc/parser.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ctgc;

namespace {

struct ConfigFlags {
  std::string constraint = "match";
  std::string strategy = "lifo";
  std::uint64_t seed = 0;
  std::string widen = "200";
  bool cache = false;
  bool no_ctgc = false;
  std::vector<std::string> iterate;
  CLI::Option* iterate_opt = nullptr;

  void add(CLI::App* app, bool with_iterate) {
    app->add_option("--constraint", constraint, "match, within:K or same-cons");
    app->add_option("--strategy", strategy, "lifo or random");
    app->add_option("--seed", seed, "seed of the random strategy");
    app->add_option("--widen", widen, "widening threshold, or off");
    app->add_flag("--cache", cache, "recycle cacheable cells");
    app->add_flag("--no-ctgc", no_ctgc, "skip the reuse pass");
    if (with_iterate)
      iterate_opt = app->add_option("--iterate", iterate, "repeat compilation until interfaces are stable")
                        ->expected(0, 1)
                        ->allow_extra_args(false);
  }

  CtgcConfig config() const {
    CtgcConfig c;
    c.constraint = ReuseConstraint::parse(constraint);
    c.strategy = SelectionStrategy::parse(strategy, seed);
    c.seed = seed;
    c.cache = cache;
    c.ctgc = !no_ctgc;
    if (widen == "off") {
      c.widen.reset();
    } else {
      try {
        c.widen = std::stoul(widen);
      } catch (const std::exception&) {
        throw Error("bad widening threshold '" + widen + "'");
      }
    }
    if (!iterate.empty() && !iterate.front().empty()) c.max_rounds = std::stoi(iterate.front());
    return c;
  }

  bool iterating() const { return iterate_opt && iterate_opt->count() > 0; }
};

std::vector<SourceFile> load(const std::vector<std::string>& paths) {
  std::vector<SourceFile> out;
  for (const auto& p : paths) out.push_back({p, read_file(p)});
  return out;
}

std::set<std::string> dump_set(const std::string& text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c != ',') {
      cur += c;
      continue;
    }
    if (cur == "alias" || cur == "dead" || cur == "reuse")
      out.insert(cur);
    else if (!cur.empty())
      throw Error("unknown dump '" + cur + "' (alias, dead, reuse)");
    cur.clear();
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

int cmd_compile(const std::vector<std::string>& files, const ConfigFlags& flags,
                const std::string& outdir, const std::string& dump) {
  CtgcConfig cfg = flags.config();
  auto dumps = dump_set(dump);
  auto sources = load(files);
  fs::create_directories(outdir);
  std::map<std::string, InterfaceFile> interfaces;
  for (const auto& entry : fs::directory_iterator(outdir)) {
    if (entry.path().extension() != ".ctgc") continue;
    std::vector<std::string> warnings;
    InterfaceFile f = read_interface(entry.path(), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    interfaces[f.module] = std::move(f);
  }
  CompileResult r = compile_sources(sources, cfg, interfaces, flags.iterating());
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  for (auto& m : r.modules) {
    write_interface(m.interface, fs::path(outdir) / (m.module.name + ".ctgc"));
    write_text(fs::path(outdir) / (m.module.name + ".m0a"), archive_text(m));
    if (!dumps.empty()) std::cout << "module " << m.module.name << "\n" << dump_text(m, dumps, cfg);
  }
  if (flags.iterating())
    std::cout << (r.converged ? "converged" : "not converged") << " rounds=" << r.rounds
              << " rounds_run=" << r.rounds_run << "\n";
  return 0;
}

int cmd_run(const std::vector<std::string>& files, const ConfigFlags& flags, const std::string& entry,
            const std::vector<std::string>& args) {
  CtgcConfig cfg = flags.config();
  auto sources = load(files);
  bool archives = std::all_of(files.begin(), files.end(),
                              [](const std::string& f) { return fs::path(f).extension() == ".m0a"; });
  Program prog;
  if (archives) {
    prog = program_from_texts(sources);
  } else {
    std::map<std::string, InterfaceFile> interfaces;
    CompileResult r = compile_sources(sources, cfg, interfaces, sources.size() > 1);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    prog = program_of(r);
  }
  std::vector<Term> inputs;
  try {
    inputs = parse_args(args);
  } catch (const Error& e) {
    throw RuntimeError(std::string("bad argument: ") + e.what());
  }
  ProcId id = resolve_entry(prog, entry, cfg.ctgc);
  RunOptions opts = run_options(cfg);
  RunResult res = run_program(prog, id, inputs, opts);
  if (!res.succeeded) {
    std::cout << "failed\n";
  } else {
    for (const auto& t : res.outputs) std::cout << to_string(t) << "\n";
  }
  std::cout << res.stats.str() << "\n";
  return 0;
}

int cmd_bench(const std::string& manifest, const std::vector<std::string>& config_names,
              const std::string& csv_path) {
  auto entries = parse_manifest(read_file(manifest), fs::path(manifest).parent_path());
  std::vector<CtgcConfig> configs;
  for (const auto& c : config_names) configs.push_back(CtgcConfig::parse(c));
  auto rows = run_bench(entries, configs);
  std::cout << bench_table(rows);
  std::string csv = bench_csv(rows);
  if (csv_path == "-")
    std::cout << "\n" << csv;
  else if (!csv_path.empty())
    write_text(csv_path, csv);
  bool failed = std::any_of(rows.begin(), rows.end(), [](const BenchRow& r) { return !r.ok; });
  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile-time garbage collection for the core language"};
  app.require_subcommand(1);

  ConfigFlags compile_flags;
  std::vector<std::string> compile_files;
  std::string outdir = ".";
  std::string dump;
  auto* compile = app.add_subcommand("compile", "analyse modules and write interfaces and archives");
  compile->add_option("files", compile_files, "source modules")->required();
  compile->add_option("-o,--out", outdir, "output directory");
  compile->add_option("--dump", dump, "alias,dead,reuse");
  compile_flags.add(compile, true);

  ConfigFlags run_flags;
  std::vector<std::string> run_files;
  std::string entry;
  std::vector<std::string> run_args;
  auto* run = app.add_subcommand("run", "run an entry point");
  run->add_option("files", run_files, "source modules or archives")->required();
  run->add_option("--entry", entry, "entry predicate, name or name/arity")->required();
  run->add_option("--args,--arg", run_args, "an input argument as a term literal (repeat for more)")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  run_flags.add(run, false);

  std::string manifest;
  std::vector<std::string> configs{"no-ctgc", "match+lifo", "within:1+lifo", "within:2+lifo",
                                   "same-cons+lifo", "match+lifo+cc"};
  std::string csv;
  auto* bench = app.add_subcommand("bench", "run the benchmark suite");
  bench->add_option("manifest", manifest, "suite manifest")->required();
  bench->add_option("--configs", configs, "configurations, e.g. match+lifo")->delimiter(',');
  bench->add_option("--csv", csv, "write CSV here (- for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile) return cmd_compile(compile_files, compile_flags, outdir, dump);
    if (*run) return cmd_run(run_files, run_flags, entry, run_args);
    if (*bench) return cmd_bench(manifest, configs, csv);
  } catch (const RuntimeError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
