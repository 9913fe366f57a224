#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txmerge/render.hpp"
#include "txmerge/result.hpp"
#include "txmerge/statement.hpp"

namespace txmerge {

// Statement-merging rewrites.  Inputs are fully bound statements, each
// tagged with the invocation it came from; outputs are a single bound
// statement plus (for selects) a dispatch map that routes merged result
// rows back to their invocations.  Every merge_* function is the identity
// on a single-element batch (modulo added key columns needed for routing).

struct SourceStatement {
  int invocation = 0;
  Statement stmt;
};

// How merged select rows find their way home.
struct DispatchMap {
  enum class Mode { Broadcast, Keyed, ByPredicate };

  Mode mode = Mode::Broadcast;
  std::vector<int> invocations;             // Broadcast: every member
  std::vector<std::string> key_columns;     // Keyed
  std::map<KeyTuple, std::vector<int>> routes;  // Keyed: key -> invocations
  std::vector<std::pair<int, Predicate>> predicates;  // ByPredicate
};

struct MergedSelect {
  Statement stmt;
  DispatchMap dispatch;
  int added_key_columns = 0;  // prepended to the projection for routing
};

// Merges same-shape point selects: per-column, values equal across every
// instance stay an equality, a single differing column becomes IN, several
// become tuple-IN; key columns missing from the projection are prepended
// and aggregate selects gain GROUP BY over the key columns.  Non-equality
// predicate shapes fall back to an OR of the member predicates with
// per-predicate dispatch.  Throws ShapeMismatch when the statements are
// not instances of one shape.
MergedSelect merge_selects(const std::vector<SourceStatement>& stmts);

// Splits merged rows per invocation, dropping the added key columns.  Rows
// that route to no invocation raise OrphanRow.
std::map<int, ResultSet> dispatch_results(const ResultSet& merged,
                                          const MergedSelect& sel);

// Concatenates same-shape inserts into one multi-row insert (batch order).
Statement merge_inserts(const std::vector<SourceStatement>& stmts);

// Merges single-row updates keyed by equality predicates.  Every assigned
// column whose per-instance expressions disagree becomes CASE WHEN with
// the instance key predicates as branch guards and the original column as
// ELSE; columns assigned identically everywhere collapse to one plain
// assignment (only when no extra_where_keys widen the match set).  Any
// duplicate key raises KeyCollision: aggregate deltas first or split the
// batch.  extra_where_keys adds keys to the WHERE list without branches,
// leaving those rows to the ELSE arm.
Statement merge_updates(const std::vector<SourceStatement>& stmts,
                        const std::vector<KeyTuple>& extra_where_keys = {});

// Merges delta updates against one shared row into a single update whose
// per-column delta is the sum (commutativity makes order irrelevant).
// Non-delta assignments raise NotCommutative.
Statement aggregate_delta_updates(const std::vector<SourceStatement>& stmts);

// Merges same-shape deletes the way selects merge (IN / tuple-IN / OR).
Statement merge_deletes(const std::vector<SourceStatement>& stmts);

// All statements identical: one statement, results fanned out to everyone.
// Returns nullopt when the batch is not uniform.
std::optional<Statement> dedupe_reads(const std::vector<SourceStatement>& stmts);

struct SequenceAllocation {
  int64_t base = 0;               // first allocated id (the value read)
  std::vector<int64_t> values;    // per-invocation ids, batch order
  int64_t delta = 0;              // increment to apply to the sequence row
};

// Rewrites n sequential id allocations into one read + one increment-by-n:
// invocation k gets current + k.
SequenceAllocation allocate_sequence(int64_t current, int n);

// A captured merged execution: the statements one merged transaction ran,
// with routing and per-invocation echo values (e.g. assigned sequence ids).
struct PlannedStatement {
  Statement stmt;
  std::optional<DispatchMap> dispatch;
  int added_key_columns = 0;
};

struct MergedPlan {
  std::string transaction;
  std::vector<int> invocations;
  std::vector<PlannedStatement> statements;
  std::map<int, nlohmann::json> echoes;
  bool capture = false;  // when false, recording calls are no-ops
};

// Renders a plan as a SQL script for an external system.  Dialects that
// cannot express a construct raise UnsupportedConstruct.
std::string emit_external_sql(const MergedPlan& plan, const Dialect& dialect);

}  // namespace txmerge
