#pragma once

#include "ctgc/dataflow.hpp"
#include "ctgc/reuse.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctgc {

/// What an importer needs to know about one exported procedure.
struct ProcInterface {
  ProcId id;
  std::vector<std::string> head_names;
  std::optional<AliasSet> summary;      // absent for foreign procedures
  std::optional<VersionInfo> reuse;     // separate reuse version, if any
  std::string foreign_alias;            // verbatim annotation text
};

/// Contents of a `.ctgc` file.
struct InterfaceFile {
  std::string module;
  std::string source_hash;
  std::string content_hash;
  /// Core-language text of every visible type and of the module's own
  /// declarations, one line each.
  std::vector<std::string> decls;
  std::map<ProcId, ProcInterface> procs;

  /// The module's declarations, parsed from `decls`.
  Module signature() const;
  SummaryTable summaries() const;
  VersionTable versions() const;
};

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

InterfaceFile make_interface(const Module& m, std::string_view source,
                             const SummaryTable& summaries, const VersionTable& versions);

/// Canonical text; also fills in the content hash.
std::string interface_text(InterfaceFile& f);

/// Parses interface text. A content hash that does not match the body is
/// reported through `warnings`.
InterfaceFile parse_interface(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Writes through a temporary file renamed into place.
void write_interface(InterfaceFile& f, const std::filesystem::path& path);
InterfaceFile read_interface(const std::filesystem::path& path,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace ctgc
