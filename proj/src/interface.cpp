#include "ctgc/interface.hpp"

#include "ctgc/parser.hpp"
#include "ctgc/printer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ctgc {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

VarNamer namer(const std::vector<std::string>& names) {
  return [&names](VarId v) { return names.at(static_cast<std::size_t>(v)); };
}

VarResolver resolver(const std::vector<std::string>& names) {
  return [&names](const std::string& n) -> std::optional<VarId> {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<VarId>(i);
    return std::nullopt;
  };
}

std::string condition_text(const ReuseCondition& c, const std::vector<std::string>& names) {
  std::vector<std::string> parts;
  for (const auto& d : c) parts.push_back(to_string(d, namer(names)));
  std::sort(parts.begin(), parts.end());
  return "{" + join(parts, ", ") + "}";
}

}  // namespace

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Module InterfaceFile::signature() const {
  return parse_signature(":- module " + module + ".\n" + join(decls, "\n") + "\n");
}

SummaryTable InterfaceFile::summaries() const {
  SummaryTable out;
  for (const auto& [id, p] : procs)
    if (p.summary) out[id] = ProcSummary{id, *p.summary, false};
  return out;
}

VersionTable InterfaceFile::versions() const {
  VersionTable out;
  for (const auto& [id, p] : procs)
    if (p.reuse) out[id] = *p.reuse;
  return out;
}

InterfaceFile make_interface(const Module& m, std::string_view source,
                             const SummaryTable& summaries, const VersionTable& versions) {
  InterfaceFile f;
  f.module = m.name;
  f.source_hash = fnv1a_hex(source);
  for (const auto& [name, def] : m.type_table.all()) f.decls.push_back(print_type_def(def));
  std::vector<ProcDecl> decls = m.decls;
  std::sort(decls.begin(), decls.end(),
            [](const ProcDecl& a, const ProcDecl& b) { return a.id() < b.id(); });
  for (const auto& d : decls)
    for (auto& line : split_lines(print_decl(d))) f.decls.push_back(std::move(line));
  for (const auto& d : decls) {
    ProcInterface pi;
    pi.id = d.id();
    if (const Procedure* p = m.find_procedure(d.id())) {
      for (VarId v : p->head) pi.head_names.push_back(p->var_name(v));
    } else if (d.foreign_alias) {
      pi.head_names = d.foreign_alias->head_names;
    } else {
      for (std::size_t i = 0; i < d.arity(); ++i) pi.head_names.push_back("V" + std::to_string(i + 1));
    }
    if (d.foreign) {
      if (d.foreign_alias) pi.foreign_alias = d.foreign_alias->text;
    } else {
      auto it = summaries.find(d.id());
      pi.summary = it == summaries.end() ? AliasSet::top() : it->second.exit_aliases;
      auto v = versions.find(d.id());
      if (v != versions.end()) pi.reuse = v->second;
    }
    f.procs[pi.id] = std::move(pi);
  }
  return f;
}

std::string interface_text(InterfaceFile& f) {
  std::ostringstream body;
  for (const auto& d : f.decls) body << "decl " << d << "\n";
  for (const auto& [id, p] : f.procs) {
    body << "proc " << id.str() << " head(" << join(p.head_names, ", ") << ")\n";
    if (p.summary) {
      body << "summary " << to_string(*p.summary, namer(p.head_names)) << "\n";
      body << "version plain " << id.name << "\n";
    }
    if (p.reuse)
      body << "version reuse " << p.reuse->reuse_name
           << " cond=" << condition_text(p.reuse->condition, p.head_names) << "\n";
    if (!p.foreign_alias.empty()) body << "foreign-alias " << p.foreign_alias << "\n";
    body << "end\n";
  }
  std::string b = body.str();
  f.content_hash = fnv1a_hex(b);
  return "ctgc-interface 1\nmodule " + f.module + "\nsource-hash " + f.source_hash +
         "\ncontent-hash " + f.content_hash + "\n" + b;
}

InterfaceFile parse_interface(std::string_view text, std::vector<std::string>* warnings) {
  auto lines = split_lines(text);
  auto fail = [](std::size_t line, const std::string& msg) -> Error {
    return Error("interface line " + std::to_string(line + 1) + ": " + msg);
  };
  if (lines.size() < 4 || lines[0] != "ctgc-interface 1") throw fail(0, "expected 'ctgc-interface 1'");
  InterfaceFile f;
  if (!starts_with(lines[1], "module ")) throw fail(1, "expected 'module'");
  f.module = lines[1].substr(7);
  if (!starts_with(lines[2], "source-hash ")) throw fail(2, "expected 'source-hash'");
  f.source_hash = lines[2].substr(12);
  if (!starts_with(lines[3], "content-hash ")) throw fail(3, "expected 'content-hash'");
  f.content_hash = lines[3].substr(13);
  std::string body;
  for (std::size_t i = 4; i < lines.size(); ++i) body += lines[i] + "\n";
  if (warnings && fnv1a_hex(body) != f.content_hash)
    warnings->push_back("interface for module " + f.module + ": content hash mismatch");

  std::size_t i = 4;
  while (i < lines.size() && starts_with(lines[i], "decl ")) f.decls.push_back(lines[i++].substr(5));
  Module sig;
  try {
    sig = f.signature();
  } catch (const Error& e) {
    throw fail(4, std::string("bad declarations: ") + e.what());
  }
  while (i < lines.size()) {
    const std::string& l = lines[i];
    if (!starts_with(l, "proc ")) throw fail(i, "expected 'proc'");
    auto sp = l.find(' ', 5);
    auto slash = l.rfind('/', sp);
    auto open = l.find("head(", sp == std::string::npos ? 5 : sp);
    if (sp == std::string::npos || slash == std::string::npos || open == std::string::npos ||
        l.back() != ')')
      throw fail(i, "malformed proc line");
    ProcInterface p;
    p.id.name = l.substr(5, slash - 5);
    p.id.arity = std::stoul(l.substr(slash + 1, sp - slash - 1));
    std::string heads = l.substr(open + 5, l.size() - open - 6);
    std::stringstream hs(heads);
    std::string h;
    while (std::getline(hs, h, ',')) {
      h.erase(0, h.find_first_not_of(' '));
      if (!h.empty()) p.head_names.push_back(h);
    }
    const ProcDecl* decl = sig.find_decl(p.id);
    if (decl == nullptr) throw fail(i, "no declaration for " + p.id.str());
    if (p.head_names.size() != p.id.arity) throw fail(i, "head arity mismatch");
    TypeEnv env = Procedure::head_env(*decl, sig.type_table);
    ++i;
    for (; i < lines.size() && lines[i] != "end"; ++i) {
      const std::string& x = lines[i];
      try {
        if (starts_with(x, "summary ")) {
          p.summary = parse_alias_set(x.substr(8), resolver(p.head_names), env);
        } else if (starts_with(x, "version plain ")) {
          // implied
        } else if (starts_with(x, "version reuse ")) {
          auto c = x.find(" cond=", 14);
          if (c == std::string::npos) throw Error("missing cond=");
          VersionInfo v;
          v.reuse_name = x.substr(14, c - 14);
          v.condition = parse_datastructure_set(x.substr(c + 6), resolver(p.head_names), env);
          p.reuse = std::move(v);
        } else if (starts_with(x, "foreign-alias ")) {
          p.foreign_alias = x.substr(14);
        } else {
          throw Error("unexpected line '" + x + "'");
        }
      } catch (const Error& e) {
        throw fail(i, e.what());
      }
    }
    if (i == lines.size()) throw fail(i - 1, "missing 'end'");
    ++i;
    f.procs[p.id] = std::move(p);
  }
  return f;
}

void write_interface(InterfaceFile& f, const std::filesystem::path& path) {
  std::string text = interface_text(f);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

InterfaceFile read_interface(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_interface(ss.str(), warnings);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace ctgc
