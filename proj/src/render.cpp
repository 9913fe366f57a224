#include "txmerge/render.hpp"

namespace txmerge {

const Dialect& Dialect::generic() {
  static const Dialect d{"generic", true, true};
  return d;
}

namespace {

const Dialect kMysql{"mysql", true, true};
const Dialect kPostgres{"postgres", true, true};
// No tuple-valued IN: expanded to an OR of conjunctions.
const Dialect kMssql{"mssql", false, true};
// No multi-row VALUES list in plain INSERT.
const Dialect kOracle{"oracle", true, false};

}  // namespace

const Dialect& Dialect::by_name(const std::string& name) {
  if (name == "generic") return generic();
  if (name == "mysql") return kMysql;
  if (name == "postgres") return kPostgres;
  if (name == "mssql") return kMssql;
  if (name == "oracle") return kOracle;
  raise(Errc::ParseError, "unknown dialect: " + name);
}

std::vector<std::string> Dialect::known_names() {
  return {"generic", "mysql", "postgres", "mssql", "oracle"};
}

namespace {

std::string render_operand(const Operand& o, bool placeholders) {
  switch (o.kind) {
    case Operand::Kind::Literal:
      return o.literal.to_sql();
    case Operand::Kind::Param:
      if (!placeholders)
        raise(Errc::ArityError, "statement still carries unbound parameters");
      return "?";
    case Operand::Kind::Column:
      return o.column;
  }
  return "?";
}

std::string render_pred(const Predicate& p, const Dialect& d, bool ph,
                        bool parenthesize_or);

std::string render_eq_conj_tuple(const std::vector<std::string>& columns,
                                 const std::vector<Operand>& tuple,
                                 bool ph) {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out += " AND ";
    out += columns[i] + " = " + render_operand(tuple[i], ph);
  }
  return out;
}

std::string render_pred(const Predicate& p, const Dialect& d, bool ph,
                        bool parenthesize_or) {
  switch (p.kind) {
    case Predicate::Kind::Eq:
      return p.column + " = " + render_operand(p.operand, ph);
    case Predicate::Kind::In: {
      std::string out = p.column + " IN (";
      for (size_t i = 0; i < p.list.size(); ++i) {
        if (i) out += ", ";
        out += render_operand(p.list[i], ph);
      }
      return out + ")";
    }
    case Predicate::Kind::TupleIn: {
      if (!d.supports_tuple_in) {
        // (a, b) IN ((1, 2), (3, 4))  ->  (a = 1 AND b = 2) OR (a = 3 AND b = 4)
        std::string out;
        for (size_t i = 0; i < p.tuples.size(); ++i) {
          if (i) out += " OR ";
          out += "(" + render_eq_conj_tuple(p.columns, p.tuples[i], ph) + ")";
        }
        if (parenthesize_or && p.tuples.size() > 1) return "(" + out + ")";
        return out;
      }
      std::string out = "(";
      for (size_t i = 0; i < p.columns.size(); ++i) {
        if (i) out += ", ";
        out += p.columns[i];
      }
      out += ") IN (";
      for (size_t i = 0; i < p.tuples.size(); ++i) {
        if (i) out += ", ";
        out += "(";
        for (size_t j = 0; j < p.tuples[i].size(); ++j) {
          if (j) out += ", ";
          out += render_operand(p.tuples[i][j], ph);
        }
        out += ")";
      }
      return out + ")";
    }
    case Predicate::Kind::And: {
      std::string out;
      for (size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += " AND ";
        out += render_pred(p.children[i], d, ph, true);
      }
      return out;
    }
    case Predicate::Kind::Or: {
      std::string out;
      for (size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += " OR ";
        out += "(" + render_pred(p.children[i], d, ph, false) + ")";
      }
      if (parenthesize_or && p.children.size() > 1) return "(" + out + ")";
      return out;
    }
  }
  return "";
}

std::string render_expr(const AssignExpr& e, const std::string& column,
                        const Dialect& d, bool ph) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      return render_operand(e.operand, ph);
    case AssignExpr::Kind::Delta: {
      // Negative literal deltas render as subtraction: c_balance - 10.50.
      if (e.delta.kind == Operand::Kind::Literal) {
        const Value& v = e.delta.literal;
        if (v.type() == Value::Type::Integer && v.as_integer() < 0)
          return e.base_column + " - " + std::to_string(-v.as_integer());
        if (v.type() == Value::Type::Decimal && v.scaled_decimal() < 0)
          return e.base_column + " - " + decimal_to_string(-v.scaled_decimal());
      }
      return e.base_column + " + " + render_operand(e.delta, ph);
    }
    case AssignExpr::Kind::CaseWhen: {
      std::string out = "CASE";
      for (const CaseBranch& b : e.branches) {
        out += " WHEN " + render_pred(b.when, d, ph, false);
        out += " THEN " + render_expr(b.then, column, d, ph);
      }
      out += " ELSE " + render_expr(e.else_expr[0], column, d, ph);
      out += " END";
      return out;
    }
    case AssignExpr::Kind::SelfRef:
      return column;
  }
  return column;
}

std::string render_statement(const Statement& s, const Dialect& d, bool ph) {
  switch (s.kind) {
    case StatementKind::Select: {
      std::string out = "SELECT ";
      for (size_t i = 0; i < s.projection.size(); ++i) {
        const ProjItem& p = s.projection[i];
        if (i) out += ", ";
        switch (p.kind) {
          case ProjItem::Kind::Column:
            out += p.column;
            break;
          case ProjItem::Kind::SumColumn:
            out += "SUM(" + p.column + ")";
            break;
          case ProjItem::Kind::SumProduct:
            out += "SUM(" + p.column + " * " + p.column2 + ")";
            break;
        }
        if (!p.alias.empty()) out += " AS " + p.alias;
      }
      out += " FROM " + s.table;
      if (s.predicate) out += " WHERE " + render_pred(*s.predicate, d, ph, false);
      if (!s.group_by.empty()) {
        out += " GROUP BY ";
        for (size_t i = 0; i < s.group_by.size(); ++i) {
          if (i) out += ", ";
          out += s.group_by[i];
        }
      }
      if (s.for_update) out += " FOR UPDATE";
      return out;
    }
    case StatementKind::Insert: {
      if (!d.supports_multirow_insert && s.insert_rows.size() > 1)
        raise(Errc::UnsupportedConstruct,
              "dialect " + d.name + " cannot express a multi-row INSERT");
      std::string out = "INSERT INTO " + s.table + " (";
      for (size_t i = 0; i < s.insert_columns.size(); ++i) {
        if (i) out += ", ";
        out += s.insert_columns[i];
      }
      out += ") VALUES ";
      for (size_t r = 0; r < s.insert_rows.size(); ++r) {
        if (r) out += ", ";
        out += "(";
        for (size_t i = 0; i < s.insert_rows[r].size(); ++i) {
          if (i) out += ", ";
          out += render_operand(s.insert_rows[r][i], ph);
        }
        out += ")";
      }
      return out;
    }
    case StatementKind::Update: {
      std::string out = "UPDATE " + s.table + " SET ";
      for (size_t i = 0; i < s.assignments.size(); ++i) {
        if (i) out += ", ";
        out += s.assignments[i].column + " = " +
               render_expr(s.assignments[i].expr, s.assignments[i].column, d, ph);
      }
      if (s.predicate) out += " WHERE " + render_pred(*s.predicate, d, ph, false);
      return out;
    }
    case StatementKind::Delete: {
      std::string out = "DELETE FROM " + s.table;
      if (s.predicate) out += " WHERE " + render_pred(*s.predicate, d, ph, false);
      return out;
    }
  }
  return "";
}

}  // namespace

std::string render_sql(const Statement& stmt, const Dialect& dialect) {
  return render_statement(stmt, dialect, /*placeholders=*/false);
}

std::string render_shape(const Statement& stmt) {
  return render_statement(stmt, Dialect::generic(), /*placeholders=*/true);
}

std::string render_predicate(const Predicate& p, const Dialect& dialect,
                             bool placeholders) {
  return render_pred(p, dialect, placeholders, false);
}

}  // namespace txmerge
