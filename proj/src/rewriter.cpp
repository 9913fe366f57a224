#include "txmerge/rewriter.hpp"

#include <algorithm>
#include <set>

namespace txmerge {

namespace {

struct EqTerm {
  std::string column;
  Value value;
};

// Decomposes a predicate into an ordered conjunction of column = literal
// terms; nullopt for any other shape.
std::optional<std::vector<EqTerm>> decompose_eq_conj(const Predicate& p) {
  std::vector<EqTerm> out;
  auto take = [&](const Predicate& e) -> bool {
    if (e.kind != Predicate::Kind::Eq) return false;
    if (e.operand.kind != Operand::Kind::Literal) return false;
    out.push_back({e.column, e.operand.literal});
    return true;
  };
  if (p.kind == Predicate::Kind::Eq) {
    if (!take(p)) return std::nullopt;
    return out;
  }
  if (p.kind != Predicate::Kind::And) return std::nullopt;
  for (const Predicate& c : p.children)
    if (!take(c)) return std::nullopt;
  std::set<std::string> cols;
  for (const EqTerm& t : out)
    if (!cols.insert(t.column).second) return std::nullopt;
  return out;
}

void require_batch(const std::vector<SourceStatement>& stmts, StatementKind kind,
                   const char* what) {
  if (stmts.empty())
    raise(Errc::ValidationError, std::string("empty batch passed to ") + what);
  for (const SourceStatement& s : stmts) {
    if (s.stmt.kind != kind)
      raise(Errc::ShapeMismatch, std::string(what) + ": statement kind differs");
    if (!s.stmt.is_bound())
      raise(Errc::ArityError, std::string(what) + " requires bound statements");
    if (s.stmt.table != stmts[0].stmt.table)
      raise(Errc::ShapeMismatch, std::string(what) + ": table differs");
  }
}

Predicate key_equality(const std::vector<std::string>& columns, const KeyTuple& key) {
  if (columns.size() == 1)
    return Predicate::eq(columns[0], Operand::lit(key[0]));
  std::vector<Predicate> terms;
  for (size_t i = 0; i < columns.size(); ++i)
    terms.push_back(Predicate::eq(columns[i], Operand::lit(key[i])));
  return Predicate::conj(std::move(terms));
}

// Key-list predicate: IN over one column, tuple-IN over several.
Predicate key_membership(const std::vector<std::string>& columns,
                         const std::vector<KeyTuple>& keys) {
  if (columns.size() == 1) {
    std::vector<Operand> list;
    for (const KeyTuple& k : keys) list.push_back(Operand::lit(k[0]));
    return Predicate::in(columns[0], std::move(list));
  }
  std::vector<std::vector<Operand>> tuples;
  for (const KeyTuple& k : keys) {
    std::vector<Operand> tup;
    for (const Value& v : k) tup.push_back(Operand::lit(v));
    tuples.push_back(std::move(tup));
  }
  return Predicate::tuple_in(columns, std::move(tuples));
}

}  // namespace

MergedSelect merge_selects(const std::vector<SourceStatement>& stmts) {
  require_batch(stmts, StatementKind::Select, "merge_selects");
  const Statement& first = stmts[0].stmt;
  for (const SourceStatement& s : stmts) {
    if (s.stmt.projection != first.projection || s.stmt.group_by != first.group_by ||
        s.stmt.for_update != first.for_update)
      raise(Errc::ShapeMismatch, "merge_selects: select clause differs");
    if (s.stmt.predicate.has_value() != first.predicate.has_value())
      raise(Errc::ShapeMismatch, "merge_selects: predicate presence differs");
  }

  MergedSelect out;
  out.stmt = first;

  std::vector<int> member_invocations;
  for (const SourceStatement& s : stmts)
    if (std::find(member_invocations.begin(), member_invocations.end(),
                  s.invocation) == member_invocations.end())
      member_invocations.push_back(s.invocation);

  bool any_aggregate = false;
  for (const ProjItem& p : first.projection) any_aggregate |= p.is_aggregate();

  // Try the equality-conjunction path.
  bool decomposable = first.predicate.has_value();
  std::vector<std::vector<EqTerm>> terms(stmts.size());
  for (size_t i = 0; i < stmts.size() && decomposable; ++i) {
    std::optional<std::vector<EqTerm>> t = decompose_eq_conj(*stmts[i].stmt.predicate);
    if (!t) {
      decomposable = false;
      break;
    }
    terms[i] = std::move(*t);
    if (terms[i].size() != terms[0].size()) {
      raise(Errc::ShapeMismatch, "merge_selects: predicate column count differs");
    }
    for (size_t c = 0; c < terms[i].size(); ++c)
      if (terms[i][c].column != terms[0][c].column)
        raise(Errc::ShapeMismatch, "merge_selects: predicate columns differ");
  }

  if (decomposable) {
    const size_t ncols = terms[0].size();
    std::vector<bool> is_key(ncols, false);
    for (size_t c = 0; c < ncols; ++c)
      for (size_t i = 1; i < stmts.size(); ++i)
        if (!(terms[i][c].value == terms[0][c].value)) is_key[c] = true;

    std::vector<std::string> key_cols;
    for (size_t c = 0; c < ncols; ++c)
      if (is_key[c]) key_cols.push_back(terms[0][c].column);

    if (key_cols.empty()) {
      // Identical predicates: pure read dedup junction, fan out results.
      out.dispatch.mode = DispatchMap::Mode::Broadcast;
      out.dispatch.invocations = member_invocations;
      return out;
    }

    // Per-instance key tuples; IN/tuple-IN lists deduped in arrival order.
    std::vector<KeyTuple> key_list;
    std::set<KeyTuple> seen;
    out.dispatch.mode = DispatchMap::Mode::Keyed;
    out.dispatch.key_columns = key_cols;
    for (size_t i = 0; i < stmts.size(); ++i) {
      KeyTuple k;
      for (size_t c = 0; c < ncols; ++c)
        if (is_key[c]) k.push_back(terms[i][c].value);
      if (seen.insert(k).second) key_list.push_back(k);
      std::vector<int>& route = out.dispatch.routes[k];
      if (std::find(route.begin(), route.end(), stmts[i].invocation) == route.end())
        route.push_back(stmts[i].invocation);
    }

    // Rebuild the predicate in the original column order: shared columns
    // stay equalities, the key columns fold into one membership test at
    // the first key column's position.
    std::vector<Predicate> parts;
    bool membership_emitted = false;
    for (size_t c = 0; c < ncols; ++c) {
      if (!is_key[c]) {
        parts.push_back(
            Predicate::eq(terms[0][c].column, Operand::lit(terms[0][c].value)));
      } else if (!membership_emitted) {
        parts.push_back(key_membership(key_cols, key_list));
        membership_emitted = true;
      }
    }
    out.stmt.predicate = parts.size() == 1 ? parts[0] : Predicate::conj(parts);

    // Routing needs the key columns in the result: prepend the missing
    // ones, and let the database separate aggregate results per key.
    std::vector<ProjItem> prepend;
    for (const std::string& kc : key_cols) {
      bool present = false;
      for (const ProjItem& p : first.projection)
        if (p.kind == ProjItem::Kind::Column && p.column == kc) present = true;
      if (!present) prepend.push_back(ProjItem::col(kc));
    }
    out.added_key_columns = static_cast<int>(prepend.size());
    out.stmt.projection.insert(out.stmt.projection.begin(), prepend.begin(),
                               prepend.end());
    for (const ProjItem& p : prepend) out.stmt.reads.insert(p.column);
    if (any_aggregate) out.stmt.group_by = key_cols;
    return out;
  }

  // Fallback: OR of the member predicates, routed by re-evaluating each
  // member predicate against every merged row.
  if (any_aggregate)
    raise(Errc::ShapeMismatch,
          "merge_selects: aggregate selects need equality predicates");
  if (!first.predicate)
    raise(Errc::ShapeMismatch, "merge_selects: cannot merge unfiltered selects");

  std::vector<Predicate> branches;
  out.dispatch.mode = DispatchMap::Mode::ByPredicate;
  for (const SourceStatement& s : stmts) {
    branches.push_back(*s.stmt.predicate);
    out.dispatch.predicates.emplace_back(s.invocation, *s.stmt.predicate);
  }
  out.stmt.predicate = Predicate::disj(std::move(branches));

  std::set<std::string> needed;
  for (const SourceStatement& s : stmts)
    collect_predicate_columns(*s.stmt.predicate, needed);
  std::vector<ProjItem> prepend;
  for (const std::string& c : needed) {
    bool present = false;
    for (const ProjItem& p : first.projection)
      if (p.kind == ProjItem::Kind::Column && p.column == c) present = true;
    if (!present) prepend.push_back(ProjItem::col(c));
  }
  out.added_key_columns = static_cast<int>(prepend.size());
  out.stmt.projection.insert(out.stmt.projection.begin(), prepend.begin(),
                             prepend.end());
  for (const ProjItem& p : prepend) out.stmt.reads.insert(p.column);
  return out;
}

namespace {

// Predicate evaluation against a result row (column-name resolution).
bool eval_on_result(const Predicate& p, const ResultSet& rs,
                    const std::vector<Value>& row) {
  auto cell = [&](const std::string& col) -> const Value& {
    int idx = rs.column_index(col);
    if (idx < 0) raise(Errc::InternalError, "dispatch misses column " + col);
    return row[static_cast<size_t>(idx)];
  };
  auto resolve = [&](const Operand& o) -> const Value& {
    if (o.kind == Operand::Kind::Literal) return o.literal;
    if (o.kind == Operand::Kind::Column) return cell(o.column);
    raise(Errc::InternalError, "unbound operand in dispatch predicate");
  };
  auto match = [](const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return false;
    if (a.type() != b.type())
      raise(Errc::TypeMismatch, "dispatch comparison across types");
    return a == b;
  };
  switch (p.kind) {
    case Predicate::Kind::Eq:
      return match(cell(p.column), resolve(p.operand));
    case Predicate::Kind::In:
      for (const Operand& o : p.list)
        if (match(cell(p.column), resolve(o))) return true;
      return false;
    case Predicate::Kind::TupleIn:
      for (const auto& tup : p.tuples) {
        bool all = true;
        for (size_t i = 0; i < p.columns.size() && all; ++i)
          all = match(cell(p.columns[i]), resolve(tup[i]));
        if (all) return true;
      }
      return false;
    case Predicate::Kind::And:
      for (const Predicate& c : p.children)
        if (!eval_on_result(c, rs, row)) return false;
      return true;
    case Predicate::Kind::Or:
      for (const Predicate& c : p.children)
        if (eval_on_result(c, rs, row)) return true;
      return false;
  }
  return false;
}

}  // namespace

std::map<int, ResultSet> dispatch_results(const ResultSet& merged,
                                          const MergedSelect& sel) {
  std::map<int, ResultSet> out;
  size_t strip = static_cast<size_t>(sel.added_key_columns);
  std::vector<std::string> member_columns(merged.columns.begin() + strip,
                                          merged.columns.end());

  auto member = [&](int invocation) -> ResultSet& {
    auto [it, fresh] = out.emplace(invocation, ResultSet{});
    if (fresh) it->second.columns = member_columns;
    return it->second;
  };

  switch (sel.dispatch.mode) {
    case DispatchMap::Mode::Broadcast:
      for (int inv : sel.dispatch.invocations) member(inv);
      for (const auto& row : merged.rows)
        for (int inv : sel.dispatch.invocations)
          member(inv).rows.emplace_back(row.begin() + strip, row.end());
      return out;

    case DispatchMap::Mode::Keyed: {
      std::vector<int> key_idx;
      for (const std::string& kc : sel.dispatch.key_columns) {
        int idx = merged.column_index(kc);
        if (idx < 0)
          raise(Errc::InternalError, "merged result misses key column " + kc);
        key_idx.push_back(idx);
      }
      for (const auto& [key, invs] : sel.dispatch.routes)
        for (int inv : invs) member(inv);
      for (const auto& row : merged.rows) {
        KeyTuple key;
        for (int idx : key_idx) key.push_back(row[static_cast<size_t>(idx)]);
        auto it = sel.dispatch.routes.find(key);
        if (it == sel.dispatch.routes.end())
          raise(Errc::OrphanRow, "merged row routes to no invocation");
        for (int inv : it->second)
          member(inv).rows.emplace_back(row.begin() + strip, row.end());
      }
      return out;
    }

    case DispatchMap::Mode::ByPredicate: {
      for (const auto& [inv, pred] : sel.dispatch.predicates) member(inv);
      for (const auto& row : merged.rows) {
        bool routed = false;
        for (const auto& [inv, pred] : sel.dispatch.predicates) {
          if (eval_on_result(pred, merged, row)) {
            member(inv).rows.emplace_back(row.begin() + strip, row.end());
            routed = true;
          }
        }
        if (!routed)
          raise(Errc::OrphanRow, "merged row matches no member predicate");
      }
      return out;
    }
  }
  raise(Errc::InternalError, "bad dispatch mode");
}

Statement merge_inserts(const std::vector<SourceStatement>& stmts) {
  require_batch(stmts, StatementKind::Insert, "merge_inserts");
  Statement out = stmts[0].stmt;
  for (size_t i = 1; i < stmts.size(); ++i) {
    const Statement& s = stmts[i].stmt;
    if (s.insert_columns != out.insert_columns)
      raise(Errc::ShapeMismatch, "merge_inserts: column list differs");
    out.insert_rows.insert(out.insert_rows.end(), s.insert_rows.begin(),
                           s.insert_rows.end());
  }
  size_t total = 0;
  for (const SourceStatement& s : stmts) total += s.stmt.insert_rows.size();
  if (out.insert_rows.size() != total)
    raise(Errc::InternalError, "merge_inserts lost rows");
  return out;
}

Statement merge_updates(const std::vector<SourceStatement>& stmts,
                        const std::vector<KeyTuple>& extra_where_keys) {
  require_batch(stmts, StatementKind::Update, "merge_updates");
  const Statement& first = stmts[0].stmt;

  std::vector<std::string> key_cols;
  std::vector<KeyTuple> keys;
  std::set<KeyTuple> seen;
  for (const SourceStatement& s : stmts) {
    if (!s.stmt.predicate)
      raise(Errc::ShapeMismatch, "merge_updates: update without a predicate");
    std::optional<std::vector<EqTerm>> terms = decompose_eq_conj(*s.stmt.predicate);
    if (!terms)
      raise(Errc::ShapeMismatch,
            "merge_updates: predicate is not an equality conjunction");
    std::vector<std::string> cols;
    KeyTuple key;
    for (const EqTerm& t : *terms) {
      cols.push_back(t.column);
      key.push_back(t.value);
    }
    if (key_cols.empty()) key_cols = cols;
    else if (cols != key_cols)
      raise(Errc::ShapeMismatch, "merge_updates: key columns differ");
    if (!seen.insert(key).second)
      raise(Errc::KeyCollision,
            "two updates target one row; aggregate deltas or split the batch");
    keys.push_back(std::move(key));

    if (s.stmt.assignments.size() != first.assignments.size())
      raise(Errc::ShapeMismatch, "merge_updates: assignment lists differ");
    for (size_t a = 0; a < first.assignments.size(); ++a)
      if (s.stmt.assignments[a].column != first.assignments[a].column)
        raise(Errc::ShapeMismatch, "merge_updates: assigned columns differ");
  }

  std::vector<KeyTuple> where_keys = keys;
  for (const KeyTuple& k : extra_where_keys) {
    if (k.size() != key_cols.size())
      raise(Errc::ValidationError, "merge_updates: extra key arity mismatch");
    if (seen.insert(k).second) where_keys.push_back(k);
  }
  bool widened = where_keys.size() != keys.size();

  Statement out = first;
  out.predicate = key_membership(key_cols, where_keys);
  out.assignments.clear();

  for (size_t a = 0; a < first.assignments.size(); ++a) {
    const std::string& column = first.assignments[a].column;
    bool all_equal = true;
    for (size_t i = 1; i < stmts.size(); ++i)
      if (!(stmts[i].stmt.assignments[a].expr == first.assignments[a].expr))
        all_equal = false;
    if (all_equal && !widened) {
      out.assignments.push_back(first.assignments[a]);
      continue;
    }
    // Per-instance branch guarded by that instance's key; untouched rows
    // (duplicate-free extras) keep their value through the ELSE arm.
    std::vector<CaseBranch> branches;
    for (size_t i = 0; i < stmts.size(); ++i)
      branches.push_back(CaseBranch{key_equality(key_cols, keys[i]),
                                    stmts[i].stmt.assignments[a].expr});
    out.assignments.push_back(Assignment{
        column, AssignExpr::case_when(std::move(branches), AssignExpr::self())});
  }

  for (const SourceStatement& s : stmts) {
    out.reads.insert(s.stmt.reads.begin(), s.stmt.reads.end());
    out.writes.insert(s.stmt.writes.begin(), s.stmt.writes.end());
  }
  return out;
}

Statement aggregate_delta_updates(const std::vector<SourceStatement>& stmts) {
  require_batch(stmts, StatementKind::Update, "aggregate_delta_updates");
  if (stmts.size() == 1) return stmts[0].stmt;
  const Statement& first = stmts[0].stmt;

  for (const SourceStatement& s : stmts) {
    if (!(s.stmt.predicate == first.predicate))
      raise(Errc::ShapeMismatch,
            "aggregate_delta_updates: statements target different rows");
    if (s.stmt.assignments.size() != first.assignments.size())
      raise(Errc::ShapeMismatch, "aggregate_delta_updates: assignment lists differ");
    for (size_t a = 0; a < first.assignments.size(); ++a) {
      const Assignment& asg = s.stmt.assignments[a];
      if (asg.column != first.assignments[a].column)
        raise(Errc::ShapeMismatch, "aggregate_delta_updates: columns differ");
      if (asg.expr.kind != AssignExpr::Kind::Delta ||
          asg.expr.base_column != asg.column)
        raise(Errc::NotCommutative,
              "aggregate_delta_updates: " + asg.column +
                  " is not a self-delta; order would matter");
      if (asg.expr.delta.kind != Operand::Kind::Literal)
        raise(Errc::ArityError, "aggregate_delta_updates needs bound deltas");
    }
  }

  Statement out = first;
  for (size_t a = 0; a < out.assignments.size(); ++a) {
    const Value& v0 = first.assignments[a].expr.delta.literal;
    if (v0.type() == Value::Type::Integer) {
      int64_t total = 0;
      for (const SourceStatement& s : stmts)
        total += s.stmt.assignments[a].expr.delta.literal.as_integer();
      out.assignments[a].expr.delta = Operand::lit(Value::integer(total));
    } else if (v0.type() == Value::Type::Decimal) {
      int64_t total = 0;
      for (const SourceStatement& s : stmts)
        total += s.stmt.assignments[a].expr.delta.literal.scaled_decimal();
      out.assignments[a].expr.delta = Operand::lit(Value::decimal_scaled(total));
    } else {
      raise(Errc::TypeMismatch, "aggregate_delta_updates: non-numeric delta");
    }
  }
  return out;
}

Statement merge_deletes(const std::vector<SourceStatement>& stmts) {
  require_batch(stmts, StatementKind::Delete, "merge_deletes");
  if (stmts.size() == 1) return stmts[0].stmt;
  const Statement& first = stmts[0].stmt;

  bool decomposable = true;
  std::vector<std::string> key_cols;
  std::vector<KeyTuple> keys;
  std::set<KeyTuple> seen;
  for (const SourceStatement& s : stmts) {
    if (!s.stmt.predicate) {
      decomposable = false;
      break;
    }
    std::optional<std::vector<EqTerm>> terms = decompose_eq_conj(*s.stmt.predicate);
    if (!terms) {
      decomposable = false;
      break;
    }
    std::vector<std::string> cols;
    KeyTuple key;
    for (const EqTerm& t : *terms) {
      cols.push_back(t.column);
      key.push_back(t.value);
    }
    if (key_cols.empty()) key_cols = cols;
    else if (cols != key_cols)
      raise(Errc::ShapeMismatch, "merge_deletes: key columns differ");
    if (seen.insert(key).second) keys.push_back(std::move(key));
  }

  Statement out = first;
  if (decomposable) {
    out.predicate = key_membership(key_cols, keys);
    return out;
  }
  std::vector<Predicate> branches;
  for (const SourceStatement& s : stmts) {
    if (!s.stmt.predicate)
      raise(Errc::ShapeMismatch, "merge_deletes: predicate presence differs");
    branches.push_back(*s.stmt.predicate);
  }
  out.predicate = Predicate::disj(std::move(branches));
  return out;
}

std::optional<Statement> dedupe_reads(const std::vector<SourceStatement>& stmts) {
  if (stmts.empty())
    raise(Errc::ValidationError, "empty batch passed to dedupe_reads");
  for (size_t i = 1; i < stmts.size(); ++i)
    if (!(stmts[i].stmt == stmts[0].stmt)) return std::nullopt;
  return stmts[0].stmt;
}

SequenceAllocation allocate_sequence(int64_t current, int n) {
  if (n < 1) raise(Errc::ValidationError, "sequence allocation needs n >= 1");
  SequenceAllocation out;
  out.base = current;
  out.delta = n;
  for (int k = 0; k < n; ++k) out.values.push_back(current + k);
  return out;
}

std::string emit_external_sql(const MergedPlan& plan, const Dialect& dialect) {
  std::string out;
  for (const PlannedStatement& ps : plan.statements) {
    out += render_sql(ps.stmt, dialect);
    out += ";\n";
  }
  return out;
}

}  // namespace txmerge
