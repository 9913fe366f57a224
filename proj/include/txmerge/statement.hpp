#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "txmerge/schema.hpp"
#include "txmerge/value.hpp"

namespace txmerge {

// Structured statement model.  A statement is either a parameterized
// template shape (operands may be Param slots) or fully bound (every
// operand a Literal); bind() turns the former into the latter.  The model
// deliberately covers only the constructs the rewriter produces and the
// engine evaluates: equality/IN/tuple-IN/AND/OR predicates, plain and
// delta and CASE WHEN assignments, multi-row inserts, SUM aggregates with
// GROUP BY.

struct Operand {
  enum class Kind : uint8_t { Literal, Param, Column };

  Kind kind = Kind::Literal;
  Value literal;            // Literal
  int param_slot = -1;      // Param: 0-based argument slot
  std::string column;       // Column: reference resolved against the current row

  static Operand lit(Value v) {
    Operand o;
    o.kind = Kind::Literal;
    o.literal = std::move(v);
    return o;
  }
  static Operand param(int slot) {
    Operand o;
    o.kind = Kind::Param;
    o.param_slot = slot;
    return o;
  }
  static Operand col(std::string name) {
    Operand o;
    o.kind = Kind::Column;
    o.column = std::move(name);
    return o;
  }

  bool operator==(const Operand& o) const {
    return kind == o.kind && literal == o.literal && param_slot == o.param_slot &&
           column == o.column;
  }
};

struct Predicate {
  enum class Kind : uint8_t { Eq, In, TupleIn, And, Or };

  Kind kind = Kind::Eq;
  std::string column;                        // Eq, In
  Operand operand;                           // Eq
  std::vector<Operand> list;                 // In
  std::vector<std::string> columns;          // TupleIn
  std::vector<std::vector<Operand>> tuples;  // TupleIn
  std::vector<Predicate> children;           // And, Or

  static Predicate eq(std::string column, Operand value);
  static Predicate in(std::string column, std::vector<Operand> list);
  static Predicate tuple_in(std::vector<std::string> columns,
                            std::vector<std::vector<Operand>> tuples);
  static Predicate conj(std::vector<Predicate> children);
  static Predicate disj(std::vector<Predicate> children);

  bool operator==(const Predicate& o) const;
};

struct CaseBranch;

struct AssignExpr {
  enum class Kind : uint8_t { Set, Delta, CaseWhen, SelfRef };

  Kind kind = Kind::SelfRef;
  Operand operand;                    // Set: column := operand
  std::string base_column;            // Delta: column := base_column + delta
  Operand delta;                      // Delta
  std::vector<CaseBranch> branches;   // CaseWhen
  std::vector<AssignExpr> else_expr;  // CaseWhen: exactly one element

  static AssignExpr set(Operand v);
  static AssignExpr plus(std::string base_column, Operand delta);
  static AssignExpr case_when(std::vector<CaseBranch> branches, AssignExpr otherwise);
  static AssignExpr self();

  bool operator==(const AssignExpr& o) const;
};

struct CaseBranch {
  Predicate when;
  AssignExpr then;

  bool operator==(const CaseBranch& o) const {
    return when == o.when && then == o.then;
  }
};

struct Assignment {
  std::string column;
  AssignExpr expr;

  bool operator==(const Assignment& o) const {
    return column == o.column && expr == o.expr;
  }
};

struct ProjItem {
  enum class Kind : uint8_t { Column, SumColumn, SumProduct };

  Kind kind = Kind::Column;
  std::string column;
  std::string column2;  // SumProduct second factor
  std::string alias;    // output name; defaults to the natural name

  static ProjItem col(std::string name, std::string alias = "");
  static ProjItem sum(std::string column, std::string alias = "");
  static ProjItem sum_product(std::string a, std::string b, std::string alias = "");

  std::string output_name() const;
  bool is_aggregate() const { return kind != Kind::Column; }
  bool operator==(const ProjItem& o) const {
    return kind == o.kind && column == o.column && column2 == o.column2 &&
           alias == o.alias;
  }
};

enum class StatementKind : uint8_t { Select, Insert, Update, Delete };

const char* statement_kind_name(StatementKind kind);

struct Statement {
  StatementKind kind = StatementKind::Select;
  std::string table;

  // Select
  std::vector<ProjItem> projection;
  std::vector<std::string> group_by;
  bool for_update = false;

  // Select / Update / Delete; empty optional means "match all rows"
  std::optional<Predicate> predicate;

  // Update
  std::vector<Assignment> assignments;

  // Insert
  std::vector<std::string> insert_columns;
  std::vector<std::vector<Operand>> insert_rows;

  // Declared access sets.  normalize_access_sets() fills/normalizes them.
  std::set<std::string> reads;
  std::set<std::string> writes;

  // Caller guarantees instances of this statement touch rows no other
  // concurrent statement touches; suppresses conflict detection.
  bool distinct_key = false;

  int param_count() const;             // 1 + highest Param slot, 0 if none
  bool is_bound() const;               // no Param operands remain
  Statement bind(const std::vector<Value>& args) const;  // ArityError on mismatch

  bool operator==(const Statement& o) const;
};

// One statement of a transaction template, with its loop/dataflow notes.
struct TemplateStatement {
  Statement stmt;
  bool per_loop_item = false;  // instantiated once per loop element at run time
  // Dataflow notes: this statement consumes values produced by an earlier
  // statement (1-based index) via the named result columns.
  struct Dataflow {
    int from_stmt = 0;
    std::vector<std::string> columns;
  };
  std::vector<Dataflow> inputs;
};

struct TransactionTemplate {
  std::string name;
  std::vector<TemplateStatement> statements;     // program order
  std::vector<std::string> partition_key;        // argument field names
  std::vector<std::pair<int, int>> promoted_groups;  // inclusive 1-based ranges

  const Statement& stmt(int one_based) const {
    return statements[static_cast<size_t>(one_based) - 1].stmt;
  }
  int size() const { return static_cast<int>(statements.size()); }
};

// Validates a statement against the schema and normalizes its access sets:
// Insert writes := inserted columns; Delete writes := every table column
// (conservative, flagged by the analyzer); otherwise declared sets must
// cover every referenced column.  Throws SchemaError / ValidationError.
void validate_statement(Statement& stmt, const Schema& schema);

// Validates the whole template: every statement, loop/dataflow indices,
// partition-key presence, promoted ranges.  Throws on violation.
void validate_template(TransactionTemplate& tmpl, const Schema& schema);

// Columns referenced anywhere in a predicate (recursing into children).
void collect_predicate_columns(const Predicate& p, std::set<std::string>& out);

}  // namespace txmerge
