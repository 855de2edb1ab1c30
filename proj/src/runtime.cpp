#include "ctgc/runtime.hpp"

#include <limits>

namespace ctgc {

std::string RuntimeStats::str() const {
  return "words_allocated=" + std::to_string(words_allocated) +
         " reused=" + std::to_string(cells_reused_inplace) +
         " cache_hits=" + std::to_string(cache_hits) +
         " cache_misses=" + std::to_string(cache_misses) +
         " leaked=" + std::to_string(within_k_leaked_words);
}

// ---------------------------------------------------------------------------
// Heap

Value Heap::alloc(std::uint32_t tag, std::vector<Value> fields, bool use_cache) {
  std::size_t n = fields.size();
  if (use_cache) {
    auto it = cache_.find(n);
    if (it != cache_.end() && !it->second.empty()) {
      std::size_t addr = it->second.back();
      it->second.pop_back();
      Cell& c = cells_[addr];
      c.cached = false;
      ++c.gen;
      c.tag = tag;
      c.fields = std::move(fields);
      c.capacity = n;
      ++stats_.cache_hits;
      stats_.words_from_cache += n;
      return Value{Value::Kind::ref, 0, tag, addr, c.gen};
    }
    ++stats_.cache_misses;
  }
  Cell c;
  c.tag = tag;
  c.fields = std::move(fields);
  c.capacity = n;
  cells_.push_back(std::move(c));
  stats_.words_allocated += n;
  return Value{Value::Kind::ref, 0, tag, cells_.size() - 1, 0};
}

Value Heap::reuse_cell(std::size_t addr, std::uint32_t tag, std::vector<Value> fields) {
  if (addr >= cells_.size()) throw RuntimeError("reuse of an unknown cell");
  Cell& c = cells_[addr];
  if (debug_ && c.cached) throw RuntimeError("in-place reuse of a cell held by the cache");
  std::size_t n = fields.size();
  if (n > c.capacity)
    throw RuntimeError("in-place reuse of a " + std::to_string(c.capacity) + "-word cell for " +
                       std::to_string(n) + " words");
  stats_.within_k_leaked_words += c.capacity - n;
  ++stats_.cells_reused_inplace;
  stats_.words_reused_inplace += n;
  ++c.gen;
  c.tag = tag;
  c.fields = std::move(fields);
  c.capacity = n;
  return Value{Value::Kind::ref, 0, tag, addr, c.gen};
}

const Cell& Heap::read(const Value& ref) {
  if (ref.kind != Value::Kind::ref || ref.addr >= cells_.size())
    throw RuntimeError("dereference of a non-reference");
  const Cell& c = cells_[ref.addr];
  if (debug_) {
    if (c.cached) throw RuntimeError("read of a cell held by the reuse cache");
    if (c.gen != ref.gen) throw RuntimeError("read through a stale reference to a reused cell");
  }
  if (tracing_) last_read_[ref.addr] = ++clock_;
  return c;
}

void Heap::to_cache(std::size_t addr) {
  Cell& c = cells_.at(addr);
  if (c.cached) return;
  c.cached = true;
  ++c.gen;
  cache_[c.capacity].push_back(addr);
}

// ---------------------------------------------------------------------------
// Program

void Program::add_module(const Module& m) {
  for (const auto& [name, def] : m.type_table.all()) types.add(def);
  for (const auto& d : m.decls) decls[d.id()] = d;
  for (const auto& p : m.procedures) procs[p.id()] = p;
}

const Procedure* Program::find(const ProcId& id) const {
  auto it = procs.find(id);
  return it == procs.end() ? nullptr : &it->second;
}

const ProcDecl* Program::find_decl(const ProcId& id) const {
  auto it = decls.find(id);
  if (it != decls.end()) return &it->second;
  return find_builtin(id);
}

// ---------------------------------------------------------------------------
// Interpreter

namespace {

const TypeDef& def_of(const TypeTable& types, const TypeExpr& t) {
  const TypeDef* d = t.is_variable() ? nullptr : types.find(t.name);
  if (d == nullptr) throw RuntimeError("no constructors for type " + t.str());
  return *d;
}

constexpr std::size_t kNoCell = std::numeric_limits<std::size_t>::max();

}  // namespace

Interpreter::Interpreter(const Program& prog, RunOptions opts)
    : prog_(prog), opts_(opts), heap_(opts.debug_checks) {
  heap_.set_tracing(opts.trace);
}

Value& Interpreter::get(Frame& f, VarId v) {
  auto& slot = f.vars.at(static_cast<std::size_t>(v));
  if (!slot) throw RuntimeError("read of unbound variable " + f.proc->var_name(v));
  return *slot;
}

Value Interpreter::literal_value(const Literal& l, const TypeExpr& type) const {
  if (l.kind == Literal::Kind::integer) return Value::integer(l.value);
  const TypeDef& def = def_of(prog_.types, type);
  Value v;
  v.kind = Value::Kind::constant;
  v.tag = static_cast<std::uint32_t>(def.index_of(l.functor));
  v.value = static_cast<std::int64_t>(def.constant_ordinal(l.functor));
  return v;
}

bool Interpreter::equal(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::integer:
    case Value::Kind::constant:
      return a.value == b.value && a.tag == b.tag;
    case Value::Kind::ref: {
      const Cell& ca = heap_.read(a);
      std::uint32_t tag = ca.tag;
      std::vector<Value> fa = ca.fields;
      const Cell& cb = heap_.read(b);
      if (tag != cb.tag || fa.size() != cb.fields.size()) return false;
      std::vector<Value> fb = cb.fields;
      for (std::size_t i = 0; i < fa.size(); ++i)
        if (!equal(fa[i], fb[i])) return false;
      return true;
    }
  }
  return false;
}

std::optional<std::vector<Value>> Interpreter::call(const ProcId& id,
                                                    const std::vector<Value>& inputs) {
  const Procedure* p = prog_.find(id);
  if (p == nullptr) {
    const ProcDecl* d = prog_.find_decl(id);
    if (d && d->foreign) throw RuntimeError("foreign predicate " + id.str() + " has no implementation");
    throw RuntimeError("unknown predicate " + id.str());
  }
  if (++depth_ > opts_.max_depth) throw RuntimeError("call depth limit exceeded");
  Frame f{p, std::vector<std::optional<Value>>(p->vars.size()),
          std::vector<std::size_t>(static_cast<std::size_t>(p->point_count()), kNoCell)};
  std::size_t k = 0;
  for (std::size_t i = 0; i < p->head.size(); ++i) {
    if (p->decl.arg_modes[i] != Mode::in) continue;
    if (k >= inputs.size()) throw RuntimeError("too few inputs for " + id.str());
    f.vars[static_cast<std::size_t>(p->head[i])] = inputs[k++];
  }
  if (k != inputs.size()) throw RuntimeError("too many inputs for " + id.str());
  bool ok = exec(f, p->body);
  --depth_;
  if (!ok) return std::nullopt;
  std::vector<Value> out;
  for (std::size_t i = 0; i < p->head.size(); ++i)
    if (p->decl.arg_modes[i] == Mode::out) out.push_back(get(f, p->head[i]));
  return out;
}

bool Interpreter::exec(Frame& f, const Goal& g) {
  const Procedure& p = *f.proc;
  auto slot = [&](VarId v) -> std::optional<Value>& { return f.vars.at(static_cast<std::size_t>(v)); };
  switch (g.kind) {
    case Goal::Kind::test:
      return equal(get(f, g.lhs), get(f, g.rhs));
    case Goal::Kind::assign:
      slot(g.lhs) = get(f, g.rhs);
      return true;
    case Goal::Kind::construct: {
      if (g.int_value) {
        slot(g.lhs) = Value::integer(*g.int_value);
        return true;
      }
      const TypeExpr& t = p.var_type(g.lhs);
      const TypeDef& def = def_of(prog_.types, t);
      auto tag = static_cast<std::uint32_t>(def.index_of(g.functor));
      if (g.args.empty()) {
        Value v;
        v.kind = Value::Kind::constant;
        v.tag = tag;
        v.value = static_cast<std::int64_t>(def.constant_ordinal(g.functor));
        slot(g.lhs) = v;
        return true;
      }
      auto arg_types = prog_.types.functor_arg_types(t, g.functor);
      std::vector<Value> fields;
      fields.reserve(g.args.size());
      for (std::size_t i = 0; i < g.args.size(); ++i) {
        const Arg& a = g.args[i];
        fields.push_back(a.is_var() ? get(f, a.var) : literal_value(*a.literal, (*arg_types)[i]));
      }
      if (g.reuse_of) {
        std::size_t addr = f.decon_addr.at(static_cast<std::size_t>(*g.reuse_of));
        if (addr == kNoCell) throw RuntimeError("reuse of a cell that was not deconstructed");
        slot(g.lhs) = heap_.reuse_cell(addr, tag, std::move(fields));
      } else {
        slot(g.lhs) = heap_.alloc(tag, std::move(fields), opts_.use_cache);
      }
      return true;
    }
    case Goal::Kind::deconstruct: {
      const Value v = get(f, g.lhs);
      if (g.int_value) return v.kind == Value::Kind::integer && v.value == *g.int_value;
      const TypeDef& def = def_of(prog_.types, p.var_type(g.lhs));
      auto tag = static_cast<std::uint32_t>(def.index_of(g.functor));
      if (v.kind != Value::Kind::ref) return g.args.empty() && v.tag == tag;
      if (g.args.empty()) return false;
      const Cell& c = heap_.read(v);
      if (c.tag != tag) return false;
      std::vector<Value> fields = c.fields;
      if (opts_.trace) events_.push_back(DeconEvent{p.id(), g.point, v.addr, heap_.now()});
      for (std::size_t i = 0; i < g.args.size(); ++i)
        if (g.args[i].is_var()) slot(g.args[i].var) = fields.at(i);
      f.decon_addr[static_cast<std::size_t>(g.point)] = v.addr;
      if (g.cacheable && opts_.use_cache) heap_.to_cache(v.addr);
      return true;
    }
    case Goal::Kind::call:
      return exec_call(f, g);
    case Goal::Kind::conj:
      for (const auto& c : g.goals)
        if (!exec(f, c)) return false;
      return true;
    case Goal::Kind::disj:
      for (const auto& br : g.goals) {
        if (br.kind != Goal::Kind::conj) {
          if (exec(f, br)) return true;
          continue;
        }
        if (!exec(f, br.goals.front())) continue;
        for (std::size_t i = 1; i < br.goals.size(); ++i)
          if (!exec(f, br.goals[i])) return false;
        return true;
      }
      return false;
  }
  return false;
}

bool Interpreter::exec_call(Frame& f, const Goal& g) {
  const ProcDecl* d = prog_.find_decl(g.callee_id());
  if (d == nullptr) throw RuntimeError("unknown predicate " + g.callee_id().str());
  auto arg = [&](std::size_t i) {
    const Arg& a = g.args[i];
    return a.is_var() ? get(f, a.var) : literal_value(*a.literal, d->arg_types[i]);
  };
  if (d->builtin) {
    std::int64_t x = arg(0).value;
    std::int64_t y = arg(1).value;
    const std::string& n = d->name;
    if (n == "int_lt") return x < y;
    if (n == "int_le") return x <= y;
    if (n == "int_gt") return x > y;
    if (n == "int_ge") return x >= y;
    if (n == "int_eq") return x == y;
    if (n == "int_ne") return x != y;
    std::int64_t r = 0;
    if (n == "int_add") r = x + y;
    else if (n == "int_sub") r = x - y;
    else if (n == "int_mul") r = x * y;
    else {
      if (y == 0) throw RuntimeError("division by zero in " + n);
      r = n == "int_div" ? x / y : x % y;
    }
    f.vars.at(static_cast<std::size_t>(g.args[2].var)) = Value::integer(r);
    return true;
  }
  std::vector<Value> inputs;
  for (std::size_t i = 0; i < g.args.size(); ++i)
    if (d->arg_modes[i] == Mode::in) inputs.push_back(arg(i));
  auto out = call(g.callee_id(), inputs);
  if (!out) return false;
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.args.size(); ++i)
    if (d->arg_modes[i] == Mode::out) f.vars.at(static_cast<std::size_t>(g.args[i].var)) = (*out)[k++];
  return true;
}

Value Interpreter::build(const Term& t, const TypeExpr& type) {
  if (t.is_integer) {
    if (type.name != "int" && type.name != "char")
      throw RuntimeError("integer " + std::to_string(t.value) + " given for type " + type.str());
    return Value::integer(t.value);
  }
  const TypeDef& def = def_of(prog_.types, type);
  const Alternative* alt = def.find(t.functor);
  if (alt == nullptr || alt->arity() != t.args.size())
    throw RuntimeError("'" + to_string(t) + "' is not a term of type " + type.str());
  auto tag = static_cast<std::uint32_t>(def.index_of(t.functor));
  if (t.args.empty()) {
    Value v;
    v.kind = Value::Kind::constant;
    v.tag = tag;
    v.value = static_cast<std::int64_t>(def.constant_ordinal(t.functor));
    return v;
  }
  auto arg_types = *prog_.types.functor_arg_types(type, t.functor);
  std::vector<Value> fields;
  for (std::size_t i = 0; i < t.args.size(); ++i) fields.push_back(build(t.args[i], arg_types[i]));
  return heap_.alloc(tag, std::move(fields), false);
}

Term Interpreter::read_back(const Value& v, const TypeExpr& type) {
  if (v.kind == Value::Kind::integer) return Term::integer(v.value);
  const TypeDef& def = def_of(prog_.types, type);
  if (v.tag >= def.alternatives.size()) throw RuntimeError("bad tag for type " + type.str());
  const Alternative& alt = def.alternatives[v.tag];
  if (v.kind == Value::Kind::constant) return Term::make(alt.functor);
  const Cell& c = heap_.read(v);
  std::vector<Value> fields = c.fields;
  const Alternative& calt = def.alternatives.at(c.tag);
  auto arg_types = *prog_.types.functor_arg_types(type, calt.functor);
  std::vector<Term> args;
  for (std::size_t i = 0; i < fields.size(); ++i) args.push_back(read_back(fields[i], arg_types.at(i)));
  return Term::make(calt.functor, std::move(args));
}

RunResult run_program(const Program& prog, const ProcId& entry, const std::vector<Term>& inputs,
                      const RunOptions& opts) {
  const ProcDecl* d = prog.find_decl(entry);
  if (d == nullptr || prog.find(entry) == nullptr)
    throw RuntimeError("unknown entry predicate " + entry.str());
  Interpreter in(prog, opts);
  std::vector<Value> args;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d->arity(); ++i) {
    if (d->arg_modes[i] != Mode::in) continue;
    if (k >= inputs.size()) throw RuntimeError("entry " + entry.str() + " needs more input arguments");
    args.push_back(in.build(inputs[k++], d->arg_types[i]));
  }
  if (k != inputs.size()) throw RuntimeError("entry " + entry.str() + " takes " + std::to_string(k) + " input arguments");
  in.heap().reset_stats();
  RunResult r;
  auto out = in.call(entry, args);
  r.stats = in.heap().stats();
  if (!out) return r;
  r.succeeded = true;
  std::size_t j = 0;
  for (std::size_t i = 0; i < d->arity(); ++i)
    if (d->arg_modes[i] == Mode::out) r.outputs.push_back(in.read_back((*out)[j++], d->arg_types[i]));
  return r;
}

ReadAfterReport read_after_oracle(const Program& prog, const ProcId& entry,
                                  const std::vector<Term>& inputs) {
  const ProcDecl* d = prog.find_decl(entry);
  if (d == nullptr || prog.find(entry) == nullptr)
    throw RuntimeError("unknown entry predicate " + entry.str());
  RunOptions opts;
  opts.trace = true;
  Interpreter in(prog, opts);
  std::vector<Value> args;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d->arity(); ++i)
    if (d->arg_modes[i] == Mode::in) args.push_back(in.build(inputs.at(k++), d->arg_types[i]));
  auto out = in.call(entry, args);
  if (out) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < d->arity(); ++i)
      if (d->arg_modes[i] == Mode::out) in.read_back((*out)[j++], d->arg_types[i]);
  }
  ReadAfterReport rep;
  const auto& reads = in.heap().last_reads();
  for (const auto& e : in.decon_events()) {
    auto it = reads.find(e.addr);
    rep.entries.push_back({e, it != reads.end() && it->second > e.time});
  }
  return rep;
}

}  // namespace ctgc
