#include "txmerge/statement.hpp"

#include <algorithm>
#include <functional>

namespace txmerge {

Predicate Predicate::eq(std::string column, Operand value) {
  Predicate p;
  p.kind = Kind::Eq;
  p.column = std::move(column);
  p.operand = std::move(value);
  return p;
}

Predicate Predicate::in(std::string column, std::vector<Operand> list) {
  Predicate p;
  p.kind = Kind::In;
  p.column = std::move(column);
  p.list = std::move(list);
  return p;
}

Predicate Predicate::tuple_in(std::vector<std::string> columns,
                              std::vector<std::vector<Operand>> tuples) {
  Predicate p;
  p.kind = Kind::TupleIn;
  p.columns = std::move(columns);
  p.tuples = std::move(tuples);
  return p;
}

Predicate Predicate::conj(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::And;
  p.children = std::move(children);
  return p;
}

Predicate Predicate::disj(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::Or;
  p.children = std::move(children);
  return p;
}

bool Predicate::operator==(const Predicate& o) const {
  return kind == o.kind && column == o.column && operand == o.operand &&
         list == o.list && columns == o.columns && tuples == o.tuples &&
         children == o.children;
}

AssignExpr AssignExpr::set(Operand v) {
  AssignExpr e;
  e.kind = Kind::Set;
  e.operand = std::move(v);
  return e;
}

AssignExpr AssignExpr::plus(std::string base_column, Operand delta) {
  AssignExpr e;
  e.kind = Kind::Delta;
  e.base_column = std::move(base_column);
  e.delta = std::move(delta);
  return e;
}

AssignExpr AssignExpr::case_when(std::vector<CaseBranch> branches,
                                 AssignExpr otherwise) {
  AssignExpr e;
  e.kind = Kind::CaseWhen;
  e.branches = std::move(branches);
  e.else_expr.push_back(std::move(otherwise));
  return e;
}

AssignExpr AssignExpr::self() { return AssignExpr(); }

bool AssignExpr::operator==(const AssignExpr& o) const {
  return kind == o.kind && operand == o.operand &&
         base_column == o.base_column && delta == o.delta &&
         branches == o.branches && else_expr == o.else_expr;
}

ProjItem ProjItem::col(std::string name, std::string alias) {
  ProjItem p;
  p.kind = Kind::Column;
  p.column = std::move(name);
  p.alias = std::move(alias);
  return p;
}

ProjItem ProjItem::sum(std::string column, std::string alias) {
  ProjItem p;
  p.kind = Kind::SumColumn;
  p.column = std::move(column);
  p.alias = std::move(alias);
  return p;
}

ProjItem ProjItem::sum_product(std::string a, std::string b, std::string alias) {
  ProjItem p;
  p.kind = Kind::SumProduct;
  p.column = std::move(a);
  p.column2 = std::move(b);
  p.alias = std::move(alias);
  return p;
}

std::string ProjItem::output_name() const {
  if (!alias.empty()) return alias;
  switch (kind) {
    case Kind::Column: return column;
    case Kind::SumColumn: return "sum_" + column;
    case Kind::SumProduct: return "sum_" + column + "_" + column2;
  }
  return column;
}

const char* statement_kind_name(StatementKind kind) {
  switch (kind) {
    case StatementKind::Select: return "select";
    case StatementKind::Insert: return "insert";
    case StatementKind::Update: return "update";
    case StatementKind::Delete: return "delete";
  }
  return "?";
}

namespace {

void visit_operands(const Predicate& p, const std::function<void(const Operand&)>& fn) {
  switch (p.kind) {
    case Predicate::Kind::Eq:
      fn(p.operand);
      break;
    case Predicate::Kind::In:
      for (const Operand& o : p.list) fn(o);
      break;
    case Predicate::Kind::TupleIn:
      for (const auto& tup : p.tuples)
        for (const Operand& o : tup) fn(o);
      break;
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
      for (const Predicate& c : p.children) visit_operands(c, fn);
      break;
  }
}

void visit_operands(const AssignExpr& e, const std::function<void(const Operand&)>& fn) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      fn(e.operand);
      break;
    case AssignExpr::Kind::Delta:
      fn(e.delta);
      break;
    case AssignExpr::Kind::CaseWhen:
      for (const CaseBranch& b : e.branches) {
        visit_operands(b.when, fn);
        visit_operands(b.then, fn);
      }
      for (const AssignExpr& els : e.else_expr) visit_operands(els, fn);
      break;
    case AssignExpr::Kind::SelfRef:
      break;
  }
}

void visit_all_operands(const Statement& s,
                        const std::function<void(const Operand&)>& fn) {
  if (s.predicate) visit_operands(*s.predicate, fn);
  for (const Assignment& a : s.assignments) visit_operands(a.expr, fn);
  for (const auto& row : s.insert_rows)
    for (const Operand& o : row) fn(o);
}

Operand bind_operand(const Operand& o, const std::vector<Value>& args) {
  if (o.kind != Operand::Kind::Param) return o;
  return Operand::lit(args[static_cast<size_t>(o.param_slot)]);
}

Predicate bind_predicate(const Predicate& p, const std::vector<Value>& args) {
  Predicate out = p;
  switch (p.kind) {
    case Predicate::Kind::Eq:
      out.operand = bind_operand(p.operand, args);
      break;
    case Predicate::Kind::In:
      for (Operand& o : out.list) o = bind_operand(o, args);
      break;
    case Predicate::Kind::TupleIn:
      for (auto& tup : out.tuples)
        for (Operand& o : tup) o = bind_operand(o, args);
      break;
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
      for (Predicate& c : out.children) c = bind_predicate(c, args);
      break;
  }
  return out;
}

AssignExpr bind_expr(const AssignExpr& e, const std::vector<Value>& args) {
  AssignExpr out = e;
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      out.operand = bind_operand(e.operand, args);
      break;
    case AssignExpr::Kind::Delta:
      out.delta = bind_operand(e.delta, args);
      break;
    case AssignExpr::Kind::CaseWhen:
      for (size_t i = 0; i < e.branches.size(); ++i) {
        out.branches[i].when = bind_predicate(e.branches[i].when, args);
        out.branches[i].then = bind_expr(e.branches[i].then, args);
      }
      for (size_t i = 0; i < e.else_expr.size(); ++i)
        out.else_expr[i] = bind_expr(e.else_expr[i], args);
      break;
    case AssignExpr::Kind::SelfRef:
      break;
  }
  return out;
}

}  // namespace

int Statement::param_count() const {
  int max_slot = -1;
  visit_all_operands(*this, [&](const Operand& o) {
    if (o.kind == Operand::Kind::Param) max_slot = std::max(max_slot, o.param_slot);
  });
  return max_slot + 1;
}

bool Statement::is_bound() const {
  bool bound = true;
  visit_all_operands(*this, [&](const Operand& o) {
    if (o.kind == Operand::Kind::Param) bound = false;
  });
  return bound;
}

Statement Statement::bind(const std::vector<Value>& args) const {
  int need = param_count();
  if (static_cast<int>(args.size()) != need)
    raise(Errc::ArityError, table + " " + statement_kind_name(kind) +
                                " expects " + std::to_string(need) +
                                " argument(s), got " + std::to_string(args.size()));
  Statement out = *this;
  if (predicate) out.predicate = bind_predicate(*predicate, args);
  for (size_t i = 0; i < assignments.size(); ++i)
    out.assignments[i].expr = bind_expr(assignments[i].expr, args);
  for (auto& row : out.insert_rows)
    for (Operand& o : row) o = bind_operand(o, args);
  return out;
}

bool Statement::operator==(const Statement& o) const {
  return kind == o.kind && table == o.table && projection == o.projection &&
         group_by == o.group_by && for_update == o.for_update &&
         predicate == o.predicate && assignments == o.assignments &&
         insert_columns == o.insert_columns && insert_rows == o.insert_rows &&
         reads == o.reads && writes == o.writes && distinct_key == o.distinct_key;
}

void collect_predicate_columns(const Predicate& p, std::set<std::string>& out) {
  switch (p.kind) {
    case Predicate::Kind::Eq:
    case Predicate::Kind::In:
      out.insert(p.column);
      break;
    case Predicate::Kind::TupleIn:
      out.insert(p.columns.begin(), p.columns.end());
      break;
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
      for (const Predicate& c : p.children) collect_predicate_columns(c, out);
      break;
  }
  if (p.operand.kind == Operand::Kind::Column) out.insert(p.operand.column);
}

namespace {

void collect_expr_columns(const AssignExpr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      if (e.operand.kind == Operand::Kind::Column) out.insert(e.operand.column);
      break;
    case AssignExpr::Kind::Delta:
      out.insert(e.base_column);
      break;
    case AssignExpr::Kind::CaseWhen:
      for (const CaseBranch& b : e.branches) {
        collect_predicate_columns(b.when, out);
        collect_expr_columns(b.then, out);
      }
      for (const AssignExpr& els : e.else_expr) collect_expr_columns(els, out);
      break;
    case AssignExpr::Kind::SelfRef:
      break;
  }
}

void check_predicate(const Predicate& p, const TableDef& table) {
  switch (p.kind) {
    case Predicate::Kind::Eq:
      table.require_column(p.column);
      break;
    case Predicate::Kind::In:
      table.require_column(p.column);
      if (p.list.empty())
        raise(Errc::ValidationError,
              "empty IN list on " + table.name() + "." + p.column);
      break;
    case Predicate::Kind::TupleIn: {
      if (p.columns.size() < 2)
        raise(Errc::ValidationError, "tuple IN needs at least two columns");
      for (const std::string& c : p.columns) table.require_column(c);
      if (p.tuples.empty())
        raise(Errc::ValidationError, "empty tuple IN list on " + table.name());
      for (const auto& tup : p.tuples)
        if (tup.size() != p.columns.size())
          raise(Errc::ValidationError, "tuple IN arity mismatch on " + table.name());
      break;
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
      if (p.children.empty())
        raise(Errc::ValidationError, "empty AND/OR predicate");
      for (const Predicate& c : p.children) check_predicate(c, table);
      break;
  }
}

void check_expr(const AssignExpr& e, const TableDef& table) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      if (e.operand.kind == Operand::Kind::Column)
        table.require_column(e.operand.column);
      break;
    case AssignExpr::Kind::Delta:
      table.require_column(e.base_column);
      break;
    case AssignExpr::Kind::CaseWhen:
      if (e.branches.empty())
        raise(Errc::ValidationError, "CASE WHEN with no branches");
      if (e.else_expr.size() != 1)
        raise(Errc::ValidationError, "CASE WHEN requires exactly one ELSE expression");
      for (const CaseBranch& b : e.branches) {
        check_predicate(b.when, table);
        check_expr(b.then, table);
      }
      check_expr(e.else_expr[0], table);
      break;
    case AssignExpr::Kind::SelfRef:
      break;
  }
}

}  // namespace

void validate_statement(Statement& stmt, const Schema& schema) {
  const TableDef& table = schema.require_table(stmt.table);

  std::set<std::string> referenced;
  if (stmt.predicate) {
    check_predicate(*stmt.predicate, table);
    collect_predicate_columns(*stmt.predicate, referenced);
  }

  switch (stmt.kind) {
    case StatementKind::Select: {
      if (stmt.projection.empty())
        raise(Errc::ValidationError, "select on " + stmt.table + " projects nothing");
      bool any_agg = false, any_plain = false;
      for (const ProjItem& p : stmt.projection) {
        table.require_column(p.column);
        if (p.kind == ProjItem::Kind::SumProduct) table.require_column(p.column2);
        (p.is_aggregate() ? any_agg : any_plain) = true;
        referenced.insert(p.column);
        if (p.kind == ProjItem::Kind::SumProduct) referenced.insert(p.column2);
      }
      for (const std::string& g : stmt.group_by) {
        table.require_column(g);
        referenced.insert(g);
        bool projected = false;
        for (const ProjItem& p : stmt.projection)
          if (p.kind == ProjItem::Kind::Column && p.column == g) projected = true;
        if (!projected)
          raise(Errc::ValidationError,
                "GROUP BY column " + g + " missing from projection");
      }
      if (any_agg && any_plain && stmt.group_by.empty())
        raise(Errc::ValidationError,
              "mixing aggregates and plain columns requires GROUP BY");
      if (!stmt.writes.empty())
        raise(Errc::ValidationError, "select on " + stmt.table + " declares writes");
      if (!stmt.assignments.empty() || !stmt.insert_rows.empty())
        raise(Errc::ValidationError, "select carries non-select clauses");
      break;
    }
    case StatementKind::Insert: {
      if (stmt.insert_columns.empty() || stmt.insert_rows.empty())
        raise(Errc::ValidationError, "insert on " + stmt.table + " has no rows");
      for (const std::string& c : stmt.insert_columns) table.require_column(c);
      std::set<std::string> cols(stmt.insert_columns.begin(), stmt.insert_columns.end());
      if (cols.size() != stmt.insert_columns.size())
        raise(Errc::ValidationError, "insert lists a column twice");
      for (const std::string& k : table.key_columns())
        if (!cols.count(k))
          raise(Errc::ValidationError,
                "insert on " + stmt.table + " omits key column " + k);
      for (const auto& row : stmt.insert_rows)
        if (row.size() != stmt.insert_columns.size())
          raise(Errc::ValidationError, "insert row arity mismatch on " + stmt.table);
      if (stmt.predicate || !stmt.assignments.empty() || !stmt.projection.empty())
        raise(Errc::ValidationError, "insert carries non-insert clauses");
      stmt.writes = cols;
      stmt.reads.clear();
      break;
    }
    case StatementKind::Update: {
      if (stmt.assignments.empty())
        raise(Errc::ValidationError, "update on " + stmt.table + " assigns nothing");
      std::set<std::string> assigned;
      for (const Assignment& a : stmt.assignments) {
        table.require_column(a.column);
        if (table.is_key_column(a.column))
          raise(Errc::ValidationError, "update may not assign key column " + a.column);
        if (!assigned.insert(a.column).second)
          raise(Errc::ValidationError, "update assigns " + a.column + " twice");
        check_expr(a.expr, table);
        if (!stmt.writes.count(a.column))
          raise(Errc::ValidationError,
                "assigned column " + a.column + " missing from write set");
        std::set<std::string> expr_cols;
        collect_expr_columns(a.expr, expr_cols);
        referenced.insert(expr_cols.begin(), expr_cols.end());
      }
      if (!stmt.projection.empty() || !stmt.insert_rows.empty())
        raise(Errc::ValidationError, "update carries non-update clauses");
      break;
    }
    case StatementKind::Delete: {
      if (!stmt.projection.empty() || !stmt.assignments.empty() ||
          !stmt.insert_rows.empty())
        raise(Errc::ValidationError, "delete carries non-delete clauses");
      // Conservative: a delete writes every column of the table.
      stmt.writes.clear();
      for (const ColumnDef& c : table.columns()) stmt.writes.insert(c.name);
      break;
    }
  }

  for (const std::string& c : referenced) {
    table.require_column(c);
    if (!stmt.reads.count(c) && !stmt.writes.count(c))
      raise(Errc::ValidationError, "column " + stmt.table + "." + c +
                                       " referenced but absent from access sets");
  }
  for (const std::string& c : stmt.reads) table.require_column(c);
  for (const std::string& c : stmt.writes) table.require_column(c);
}

void validate_template(TransactionTemplate& tmpl, const Schema& schema) {
  if (tmpl.name.empty())
    raise(Errc::ValidationError, "transaction template with empty name");
  if (tmpl.statements.empty())
    raise(Errc::ValidationError, "template " + tmpl.name + " has no statements");
  for (TemplateStatement& ts : tmpl.statements)
    validate_statement(ts.stmt, schema);
  int n = tmpl.size();
  for (int i = 0; i < n; ++i) {
    for (const TemplateStatement::Dataflow& d : tmpl.statements[i].inputs) {
      if (d.from_stmt < 1 || d.from_stmt > i)
        raise(Errc::ValidationError,
              tmpl.name + ": dataflow into statement " + std::to_string(i + 1) +
                  " must come from an earlier statement");
      if (d.columns.empty())
        raise(Errc::ValidationError, tmpl.name + ": dataflow with no columns");
    }
  }
  for (const auto& [lo, hi] : tmpl.promoted_groups)
    if (lo < 1 || hi > n || lo > hi)
      raise(Errc::ValidationError, tmpl.name + ": promoted group out of range");
}

}  // namespace txmerge
