#pragma once

#include "ctgc/ir.hpp"
#include "ctgc/parser.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctgc {

class RuntimeError : public Error {
public:
  using Error::Error;
};

/// A machine word: an integer, a constant (enum ordinal, with the
/// alternative index as tag) or a tagged reference to a heap cell.
struct Value {
  enum class Kind { integer, constant, ref };
  Kind kind = Kind::integer;
  std::int64_t value = 0;   // integer, or ordinal of a constant
  std::uint32_t tag = 0;    // alternative index
  std::size_t addr = 0;     // ref
  std::uint64_t gen = 0;    // generation of the cell when the ref was made

  static Value integer(std::int64_t v) { return Value{Kind::integer, v, 0, 0, 0}; }
};

struct RuntimeStats {
  std::uint64_t words_allocated = 0;
  std::uint64_t cells_reused_inplace = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t within_k_leaked_words = 0;
  std::uint64_t words_reused_inplace = 0;
  std::uint64_t words_from_cache = 0;

  /// `words_allocated=N reused=N cache_hits=N cache_misses=N leaked=N`
  std::string str() const;
};

struct Cell {
  std::uint32_t tag = 0;
  std::vector<Value> fields;
  std::size_t capacity = 0;
  std::uint64_t gen = 0;
  bool cached = false;
};

class Heap {
public:
  explicit Heap(bool debug_checks = true) : debug_(debug_checks) {}

  Value alloc(std::uint32_t tag, std::vector<Value> fields, bool use_cache);
  /// Overwrites the cell at `addr` with a new term of at most its size.
  Value reuse_cell(std::size_t addr, std::uint32_t tag, std::vector<Value> fields);
  /// The cell denoted by a reference. Throws on a stale reference or a
  /// cached cell when debug checks are on.
  const Cell& read(const Value& ref);
  void to_cache(std::size_t addr);

  const RuntimeStats& stats() const { return stats_; }
  void reset_stats() { stats_ = RuntimeStats{}; }
  std::size_t cell_count() const { return cells_.size(); }

  void set_tracing(bool on) { tracing_ = on; }
  std::uint64_t now() const { return clock_; }
  /// Last time each cell was read, when tracing.
  const std::map<std::size_t, std::uint64_t>& last_reads() const { return last_read_; }

private:
  bool debug_;
  bool tracing_ = false;
  std::uint64_t clock_ = 0;
  std::vector<Cell> cells_;
  std::map<std::size_t, std::vector<std::size_t>> cache_;
  std::map<std::size_t, std::uint64_t> last_read_;
  RuntimeStats stats_;
};

/// All procedures and types available to a run.
struct Program {
  TypeTable types;
  std::map<ProcId, Procedure> procs;
  std::map<ProcId, ProcDecl> decls;

  void add_module(const Module& m);
  const Procedure* find(const ProcId& id) const;
  const ProcDecl* find_decl(const ProcId& id) const;
};

struct RunOptions {
  bool use_cache = false;
  bool debug_checks = true;
  bool trace = false;
  std::size_t max_depth = 100000;
};

struct DeconEvent {
  ProcId proc;
  ProgramPoint point = -1;
  std::size_t addr = 0;
  std::uint64_t time = 0;
};

class Interpreter {
public:
  Interpreter(const Program& prog, RunOptions opts);

  /// Runs a procedure. `inputs` are the input arguments in order; returns
  /// the outputs in order, or nullopt when the call fails.
  std::optional<std::vector<Value>> call(const ProcId& id, const std::vector<Value>& inputs);

  Value build(const Term& t, const TypeExpr& type);
  Term read_back(const Value& v, const TypeExpr& type);

  Heap& heap() { return heap_; }
  const std::vector<DeconEvent>& decon_events() const { return events_; }

private:
  struct Frame {
    const Procedure* proc;
    std::vector<std::optional<Value>> vars;
    std::vector<std::size_t> decon_addr;
  };

  bool exec(Frame& f, const Goal& g);
  bool exec_call(Frame& f, const Goal& g);
  Value literal_value(const Literal& l, const TypeExpr& type) const;
  Value& get(Frame& f, VarId v);
  bool equal(const Value& a, const Value& b);

  const Program& prog_;
  RunOptions opts_;
  Heap heap_;
  std::size_t depth_ = 0;
  std::vector<DeconEvent> events_;
};

/// Result of running an entry point with term arguments.
struct RunResult {
  bool succeeded = false;
  std::vector<Term> outputs;
  RuntimeStats stats;
};

/// Builds the inputs (not counted in the statistics), runs `entry` and
/// reads back the outputs.
RunResult run_program(const Program& prog, const ProcId& entry, const std::vector<Term>& inputs,
                      const RunOptions& opts);

/// Read-after oracle: runs the program with tracing and reports, for every
/// deconstruction event, whether its cell was read again afterwards
/// (including by the final outputs).
struct ReadAfterReport {
  struct Entry {
    DeconEvent event;
    bool read_later = false;
  };
  std::vector<Entry> entries;
};

ReadAfterReport read_after_oracle(const Program& prog, const ProcId& entry,
                                  const std::vector<Term>& inputs);

}  // namespace ctgc
