#pragma once

#include <string>
#include <vector>

#include "txmerge/statement.hpp"

namespace txmerge {

// Target-dialect capabilities for SQL emission.  The canonical dialect is
// what the storage engine parses back and what golden outputs are written
// in: uppercase keywords, single spaces, comma-space separators.
struct Dialect {
  std::string name = "generic";
  bool supports_tuple_in = true;        // (a, b) IN ((1, 2), (3, 4))
  bool supports_multirow_insert = true; // VALUES (..), (..)

  static const Dialect& generic();
  static const Dialect& by_name(const std::string& name);  // ParseError if unknown
  static std::vector<std::string> known_names();
};

// Renders a fully bound statement.  Statements with unbound Param slots are
// rejected with ArityError; UnsupportedConstruct when the dialect cannot
// express the statement (e.g. multi-row INSERT without support).
std::string render_sql(const Statement& stmt, const Dialect& dialect = Dialect::generic());

// Renders a template shape for display: Param slots appear as '?'.
std::string render_shape(const Statement& stmt);

std::string render_predicate(const Predicate& p, const Dialect& dialect,
                             bool placeholders = false);

}  // namespace txmerge
