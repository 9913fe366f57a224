#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "txmerge/statement.hpp"

namespace txmerge {

// Static conflict analysis over a transaction template.  Two statements
// conflict when they touch the same table and share at least one column
// that either writes, with two exceptions: (i) exactly one of them is an
// Insert while the other queries existing rows, and (ii) both carry the
// distinct_key promise.  Grouping starts from singletons and repeatedly
// fuses any two groups joined by a conflict, together with every group
// between them, so groups always cover contiguous statement ranges.  When
// two merged instances run group-interleaved (all of instance 1's group-i
// statements, then instance 2's), every conflicting statement pair across
// the instances executes in the same order as the serial schedule, which
// is exactly the equivalence argument verify_interleaving() re-checks.

struct ConflictWitness {
  int stmt_a = 0;  // 1-based statement positions, stmt_a < stmt_b
  int stmt_b = 0;
  std::string table;
  std::string column;
};

struct MergeGroup {
  int lo = 0;  // inclusive 1-based range
  int hi = 0;
  bool sequential() const { return lo != hi; }
  bool promoted = false;  // operator-approved for merged execution anyway
  std::vector<ConflictWitness> witnesses;
};

struct MergeGroupReport {
  std::string transaction;
  std::vector<MergeGroup> groups;        // contiguous, covering 1..n
  std::vector<int> conservative_deletes; // statements treated as writing all columns

  nlohmann::json to_json() const;
};

// Symmetric statement-level conflict test; returns a witness column when
// the statements conflict.
std::optional<ConflictWitness> conflict_between(const Statement& a,
                                                const Statement& b);

MergeGroupReport analyze_template(const TransactionTemplate& tmpl);

// Re-derives the pairwise ordering argument for two group-interleaved
// instances and throws InternalError if any conflicting pair would execute
// against serial order.  Returns a human-readable proof note.
std::string verify_interleaving(const MergeGroupReport& report,
                                const TransactionTemplate& tmpl);

}  // namespace txmerge
