#include "txmerge/engine.hpp"

#include <algorithm>
#include <sstream>

namespace txmerge {

namespace {

uint64_t fnv1a(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

const Value& resolve_operand(const Operand& o, const std::vector<Value>& row,
                             const TableDef& def) {
  switch (o.kind) {
    case Operand::Kind::Literal:
      return o.literal;
    case Operand::Kind::Column:
      return row[static_cast<size_t>(def.require_column(o.column))];
    case Operand::Kind::Param:
      raise(Errc::InternalError, "unbound parameter reached the engine");
  }
  raise(Errc::InternalError, "bad operand");
}

// SQL comparison semantics: NULL never matches; differing non-null types are
// a model bug, not an "unknown" result.
bool values_match(const Value& cell, const Value& probe) {
  if (cell.is_null() || probe.is_null()) return false;
  if (cell.type() != probe.type())
    raise(Errc::TypeMismatch,
          std::string("comparing ") + Value::type_name(cell.type()) + " with " +
              Value::type_name(probe.type()));
  return cell == probe;
}

bool eval_predicate(const Predicate& p, const std::vector<Value>& row,
                    const TableDef& def) {
  switch (p.kind) {
    case Predicate::Kind::Eq: {
      const Value& cell = row[static_cast<size_t>(def.require_column(p.column))];
      return values_match(cell, resolve_operand(p.operand, row, def));
    }
    case Predicate::Kind::In: {
      const Value& cell = row[static_cast<size_t>(def.require_column(p.column))];
      for (const Operand& o : p.list)
        if (values_match(cell, resolve_operand(o, row, def))) return true;
      return false;
    }
    case Predicate::Kind::TupleIn: {
      for (const auto& tup : p.tuples) {
        bool all = true;
        for (size_t i = 0; i < p.columns.size(); ++i) {
          const Value& cell =
              row[static_cast<size_t>(def.require_column(p.columns[i]))];
          if (!values_match(cell, resolve_operand(tup[i], row, def))) {
            all = false;
            break;
          }
        }
        if (all) return true;
      }
      return false;
    }
    case Predicate::Kind::And:
      for (const Predicate& c : p.children)
        if (!eval_predicate(c, row, def)) return false;
      return true;
    case Predicate::Kind::Or:
      for (const Predicate& c : p.children)
        if (eval_predicate(c, row, def)) return true;
      return false;
  }
  return false;
}

void check_cell_type(const Value& v, const ColumnDef& col, const std::string& table) {
  if (v.is_null()) return;
  if (v.type() != col.type)
    raise(Errc::TypeMismatch, "writing " + std::string(Value::type_name(v.type())) +
                                  " into " + table + "." + col.name);
}

Value add_values(const Value& base, const Value& delta) {
  if (base.is_null() || delta.is_null()) return Value::null();
  if (base.type() == Value::Type::Integer && delta.type() == Value::Type::Integer)
    return Value::integer(base.as_integer() + delta.as_integer());
  if (base.type() == Value::Type::Decimal && delta.type() == Value::Type::Decimal)
    return Value::decimal_scaled(base.scaled_decimal() + delta.scaled_decimal());
  raise(Errc::TypeMismatch, "delta arithmetic over mismatched types");
}

Value eval_assign(const AssignExpr& e, const std::string& column,
                  const std::vector<Value>& old_row, const TableDef& def) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      return resolve_operand(e.operand, old_row, def);
    case AssignExpr::Kind::Delta: {
      const Value& base =
          old_row[static_cast<size_t>(def.require_column(e.base_column))];
      return add_values(base, resolve_operand(e.delta, old_row, def));
    }
    case AssignExpr::Kind::CaseWhen: {
      for (const CaseBranch& b : e.branches)
        if (eval_predicate(b.when, old_row, def))
          return eval_assign(b.then, column, old_row, def);
      return eval_assign(e.else_expr[0], column, old_row, def);
    }
    case AssignExpr::Kind::SelfRef:
      return old_row[static_cast<size_t>(def.require_column(column))];
  }
  raise(Errc::InternalError, "bad assignment expression");
}

// Index over the CASE arms of one assignment, keyed by the primary-key tuple
// each guard pins.  Only guards that are plain equality over exactly the key
// columns (non-null literals of the column's type) qualify; everything else
// leaves `usable` false so the caller keeps the linear scan, preserving its
// evaluation order and its type-mismatch errors.
struct CaseArmIndex {
  bool usable = false;
  std::map<KeyTuple, const AssignExpr*> by_key;
};

CaseArmIndex index_case_arms(const AssignExpr& e, const TableDef& def) {
  CaseArmIndex idx;
  if (e.kind != AssignExpr::Kind::CaseWhen) return idx;
  const std::vector<int>& key_idx = def.key_indices();
  for (const CaseBranch& b : e.branches) {
    std::vector<const Predicate*> eqs;
    if (b.when.kind == Predicate::Kind::Eq) {
      eqs.push_back(&b.when);
    } else if (b.when.kind == Predicate::Kind::And) {
      for (const Predicate& c : b.when.children) {
        if (c.kind != Predicate::Kind::Eq) return CaseArmIndex{};
        eqs.push_back(&c);
      }
    } else {
      return CaseArmIndex{};
    }
    if (eqs.size() != key_idx.size()) return CaseArmIndex{};
    KeyTuple k(key_idx.size(), Value::null());
    for (const Predicate* c : eqs) {
      if (c->operand.kind != Operand::Kind::Literal) return CaseArmIndex{};
      const Value& v = c->operand.literal;
      bool placed = false;
      for (size_t i = 0; i < key_idx.size(); ++i) {
        const ColumnDef& col = def.column(key_idx[i]);
        if (col.name != c->column) continue;
        if (!k[i].is_null()) return CaseArmIndex{};  // column pinned twice
        if (v.is_null() || v.type() != col.type) return CaseArmIndex{};
        k[i] = v;
        placed = true;
        break;
      }
      if (!placed) return CaseArmIndex{};  // guard touches a non-key column
    }
    idx.by_key.emplace(std::move(k), &b.then);  // first arm wins, as the scan
  }
  idx.usable = true;
  return idx;
}

// SUM accumulator with SQL NULL semantics: NULL cells are skipped, an empty
// or all-NULL input sums to NULL.
struct SumAcc {
  bool any = false;
  Value::Type type = Value::Type::Null;
  int64_t total = 0;

  void add(const Value& v) {
    if (v.is_null()) return;
    int64_t raw;
    if (v.type() == Value::Type::Integer) raw = v.as_integer();
    else if (v.type() == Value::Type::Decimal) raw = v.scaled_decimal();
    else raise(Errc::TypeMismatch, "SUM over non-numeric value");
    if (!any) {
      type = v.type();
    } else if (type != v.type()) {
      raise(Errc::TypeMismatch, "SUM over mixed numeric types");
    }
    any = true;
    total += raw;
  }

  Value value() const {
    if (!any) return Value::null();
    return type == Value::Type::Integer ? Value::integer(total)
                                        : Value::decimal_scaled(total);
  }
};

Value multiply_cells(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  bool a_dec = a.type() == Value::Type::Decimal;
  bool b_dec = b.type() == Value::Type::Decimal;
  if (a_dec && b_dec)
    raise(Errc::TypeMismatch, "product of two decimals exceeds supported scale");
  if (!a_dec && !b_dec) return Value::integer(a.as_integer() * b.as_integer());
  int64_t scaled = a_dec ? a.scaled_decimal() : b.scaled_decimal();
  int64_t factor = a_dec ? b.as_integer() : a.as_integer();
  return Value::decimal_scaled(scaled * factor);
}

}  // namespace

std::string Snapshot::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  uint64_t v = digest;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

Engine::Engine(Schema schema, EngineOptions opts)
    : schema_(std::move(schema)), opts_(opts) {
  tables_.resize(schema_.tables().size());
  for (size_t i = 0; i < tables_.size(); ++i)
    tables_[i].def_index = static_cast<int>(i);
}

int Engine::table_index(const std::string& name) const {
  const std::vector<TableDef>& defs = schema_.tables();
  for (size_t i = 0; i < defs.size(); ++i)
    if (defs[i].name() == name) return static_cast<int>(i);
  raise(Errc::SchemaError, "unknown table " + name);
}

void Engine::load_row(const std::string& table, std::vector<Value> row) {
  std::unique_lock lk(mtx_);
  int ti = table_index(table);
  const TableDef& def = table_def(ti);
  if (row.size() != def.columns().size())
    raise(Errc::ValidationError, "row width mismatch loading " + table);
  for (size_t i = 0; i < row.size(); ++i)
    check_cell_type(row[i], def.column(static_cast<int>(i)), table);
  KeyTuple key;
  for (int idx : def.key_indices()) {
    const Value& v = row[static_cast<size_t>(idx)];
    if (v.is_null())
      raise(Errc::ConstraintViolation, "NULL key column loading " + table);
    key.push_back(v);
  }
  auto [it, inserted] = tables_[static_cast<size_t>(ti)].rows.emplace(
      std::move(key), std::move(row));
  if (!inserted)
    raise(Errc::ConstraintViolation, "duplicate key loading " + table);
}

TxnId Engine::begin() {
  std::unique_lock lk(mtx_);
  TxnId id = next_txn_++;
  TxnState st;
  if (armed_fault_) {
    st.fault_after = *armed_fault_;
    armed_fault_.reset();
  }
  txns_.emplace(id, std::move(st));
  return id;
}

Engine::TxnState& Engine::require_txn(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end())
    raise(Errc::InvalidState, "transaction " + std::to_string(txn) +
                                  " is not active");
  return it->second;
}

bool Engine::try_acquire(TxnId txn, TxnState& st, const LockKey& key,
                         bool exclusive) {
  LockState& ls = locks_[key];
  if (ls.exclusive == txn) return true;
  if (exclusive) {
    bool sole_sharer = ls.shared.size() == 1 && ls.shared.count(txn) == 1;
    if (ls.exclusive == 0 && (ls.shared.empty() || sole_sharer)) {
      ls.shared.erase(txn);
      ls.exclusive = txn;
      auto [it, fresh] = st.locks.emplace(key, true);
      if (!fresh) it->second = true;
      else ++stats_.rows_locked;
      return true;
    }
    return false;
  }
  if (ls.exclusive == 0) {
    if (ls.shared.insert(txn).second) {
      if (st.locks.emplace(key, false).second) ++stats_.rows_locked;
    }
    return true;
  }
  return false;
}

void Engine::release_all(TxnId txn, TxnState& st) {
  for (const auto& [key, excl] : st.locks) {
    auto it = locks_.find(key);
    if (it == locks_.end()) continue;
    if (it->second.exclusive == txn) it->second.exclusive = 0;
    it->second.shared.erase(txn);
    if (it->second.exclusive == 0 && it->second.shared.empty()) locks_.erase(it);
  }
  st.locks.clear();
}

void Engine::abort_locked(TxnId txn, TxnState& st) {
  for (auto it = st.undo.rbegin(); it != st.undo.rend(); ++it) {
    auto& rows = tables_[static_cast<size_t>(it->table)].rows;
    if (it->existed) rows[it->key] = it->old_row;
    else rows.erase(it->key);
  }
  st.undo.clear();
  release_all(txn, st);
}

void Engine::commit(TxnId txn) {
  std::unique_lock lk(mtx_);
  TxnState& st = require_txn(txn);
  release_all(txn, st);
  txns_.erase(txn);
  cv_.notify_all();
}

void Engine::abort(TxnId txn) {
  std::unique_lock lk(mtx_);
  TxnState& st = require_txn(txn);
  abort_locked(txn, st);
  ++stats_.aborts;
  txns_.erase(txn);
  cv_.notify_all();
}

void Engine::log_undo(TxnState& st, int table, const KeyTuple& key) {
  if (!st.undo_logged.insert({table, key}).second) return;
  UndoRecord rec;
  rec.table = table;
  rec.key = key;
  auto& rows = tables_[static_cast<size_t>(table)].rows;
  auto it = rows.find(key);
  rec.existed = it != rows.end();
  if (rec.existed) rec.old_row = it->second;
  st.undo.push_back(std::move(rec));
}

std::vector<KeyTuple> Engine::match_rows(const TableData& t, const TableDef& def,
                                         const std::optional<Predicate>& pred) const {
  std::vector<KeyTuple> out;
  if (!pred) {
    for (const auto& [key, row] : t.rows) out.push_back(key);
    return out;
  }

  // Point-lookup paths: equality (or IN / tuple-IN) over exactly the
  // primary-key columns.  Everything else scans in key order.
  const std::vector<std::string> key_cols = def.key_columns();
  // Key probes keep the same type discipline as full scans: a cross-typed
  // probe value is a caller bug, not an empty match; NULL never matches.
  auto lookup_keys = [&](const std::vector<KeyTuple>& candidates) {
    for (const KeyTuple& k : candidates) {
      bool has_null = false;
      for (size_t i = 0; i < k.size(); ++i) {
        if (k[i].type() == Value::Type::Null) { has_null = true; continue; }
        Value::Type want = def.column(def.key_indices()[i]).type;
        if (k[i].type() != want)
          raise(Errc::TypeMismatch,
                "key probe type for " + def.name() + "." + key_cols[i]);
      }
      if (has_null) continue;
      if (t.rows.count(k)) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  };

  auto literal_of = [](const Operand& o) -> const Value* {
    return o.kind == Operand::Kind::Literal ? &o.literal : nullptr;
  };

  const Predicate& p = *pred;
  if (p.kind == Predicate::Kind::Eq && key_cols.size() == 1 &&
      p.column == key_cols[0]) {
    if (const Value* v = literal_of(p.operand)) {
      lookup_keys({{*v}});
      return out;
    }
  }
  if (p.kind == Predicate::Kind::In && key_cols.size() == 1 &&
      p.column == key_cols[0]) {
    std::vector<KeyTuple> cand;
    bool all_lit = true;
    for (const Operand& o : p.list) {
      const Value* v = literal_of(o);
      if (!v) { all_lit = false; break; }
      cand.push_back({*v});
    }
    if (all_lit) {
      lookup_keys(cand);
      return out;
    }
  }
  if (p.kind == Predicate::Kind::TupleIn && p.columns.size() == key_cols.size()) {
    std::vector<int> perm(key_cols.size(), -1);
    bool cover = true;
    for (size_t i = 0; i < key_cols.size(); ++i) {
      for (size_t j = 0; j < p.columns.size(); ++j)
        if (p.columns[j] == key_cols[i]) perm[i] = static_cast<int>(j);
      if (perm[i] < 0) cover = false;
    }
    if (cover) {
      std::vector<KeyTuple> cand;
      bool all_lit = true;
      for (const auto& tup : p.tuples) {
        KeyTuple k;
        for (size_t i = 0; i < key_cols.size() && all_lit; ++i) {
          const Value* v = literal_of(tup[static_cast<size_t>(perm[i])]);
          if (!v) all_lit = false;
          else k.push_back(*v);
        }
        if (!all_lit) break;
        cand.push_back(std::move(k));
      }
      if (all_lit) {
        lookup_keys(cand);
        return out;
      }
    }
  }
  if (p.kind == Predicate::Kind::And) {
    std::map<std::string, const Value*> eqs;
    bool plain = true;
    for (const Predicate& c : p.children) {
      if (c.kind != Predicate::Kind::Eq) { plain = false; break; }
      const Value* v = literal_of(c.operand);
      if (!v) { plain = false; break; }
      eqs[c.column] = v;
    }
    if (plain && eqs.size() == p.children.size() && eqs.size() == key_cols.size()) {
      KeyTuple k;
      bool cover = true;
      for (const std::string& kc : key_cols) {
        auto it = eqs.find(kc);
        if (it == eqs.end()) { cover = false; break; }
        k.push_back(*it->second);
      }
      if (cover) {
        lookup_keys({k});
        return out;
      }
    }
  }

  for (const auto& [key, row] : t.rows)
    if (eval_predicate(p, row, def)) out.push_back(key);
  return out;
}

ResultSet Engine::apply_locked(TxnState& st, const Statement& stmt,
                               std::vector<KeyTuple> matched) {
  int ti = table_index(stmt.table);
  TableData& t = tables_[static_cast<size_t>(ti)];
  const TableDef& def = table_def(ti);
  ResultSet rs;

  switch (stmt.kind) {
    case StatementKind::Select: {
      for (const ProjItem& p : stmt.projection) rs.columns.push_back(p.output_name());
      bool any_agg = false;
      for (const ProjItem& p : stmt.projection) any_agg |= p.is_aggregate();
      if (!any_agg) {
        for (const KeyTuple& k : matched) {
          const std::vector<Value>& row = t.rows[k];
          std::vector<Value> out;
          for (const ProjItem& p : stmt.projection)
            out.push_back(row[static_cast<size_t>(def.require_column(p.column))]);
          rs.rows.push_back(std::move(out));
        }
        return rs;
      }
      // Grouped aggregation; with no GROUP BY there is exactly one global
      // group even over zero matched rows.
      std::map<KeyTuple, std::vector<SumAcc>> groups;
      size_t n_aggs = 0;
      for (const ProjItem& p : stmt.projection)
        if (p.is_aggregate()) ++n_aggs;
      if (stmt.group_by.empty()) groups[{}] = std::vector<SumAcc>(n_aggs);
      for (const KeyTuple& k : matched) {
        const std::vector<Value>& row = t.rows[k];
        KeyTuple gk;
        for (const std::string& g : stmt.group_by)
          gk.push_back(row[static_cast<size_t>(def.require_column(g))]);
        auto [it, fresh] = groups.emplace(std::move(gk), std::vector<SumAcc>(n_aggs));
        size_t agg_i = 0;
        for (const ProjItem& p : stmt.projection) {
          if (!p.is_aggregate()) continue;
          const Value& a = row[static_cast<size_t>(def.require_column(p.column))];
          if (p.kind == ProjItem::Kind::SumColumn) {
            it->second[agg_i].add(a);
          } else {
            const Value& b = row[static_cast<size_t>(def.require_column(p.column2))];
            it->second[agg_i].add(multiply_cells(a, b));
          }
          ++agg_i;
        }
      }
      for (const auto& [gk, accs] : groups) {
        std::vector<Value> out;
        size_t agg_i = 0;
        for (const ProjItem& p : stmt.projection) {
          if (p.is_aggregate()) {
            out.push_back(accs[agg_i++].value());
          } else {
            size_t gi = 0;
            for (; gi < stmt.group_by.size(); ++gi)
              if (stmt.group_by[gi] == p.column) break;
            out.push_back(gk[gi]);
          }
        }
        rs.rows.push_back(std::move(out));
      }
      return rs;
    }

    case StatementKind::Insert: {
      size_t undo_mark = st.undo.size();
      std::vector<int> col_idx;
      for (const std::string& c : stmt.insert_columns)
        col_idx.push_back(def.require_column(c));
      for (const auto& src : stmt.insert_rows) {
        std::vector<Value> row(def.columns().size(), Value::null());
        for (size_t i = 0; i < src.size(); ++i) {
          if (src[i].kind != Operand::Kind::Literal)
            raise(Errc::InternalError, "unbound insert operand");
          check_cell_type(src[i].literal, def.column(col_idx[i]), stmt.table);
          row[static_cast<size_t>(col_idx[i])] = src[i].literal;
        }
        KeyTuple key;
        for (int idx : def.key_indices()) {
          if (row[static_cast<size_t>(idx)].is_null()) {
            key.clear();
            break;
          }
          key.push_back(row[static_cast<size_t>(idx)]);
        }
        bool violation = key.empty() || t.rows.count(key) > 0;
        if (violation) {
          // Statement-level rollback: undo this statement's rows, keep the
          // transaction alive.
          while (st.undo.size() > undo_mark) {
            const UndoRecord& rec = st.undo.back();
            auto& rows = tables_[static_cast<size_t>(rec.table)].rows;
            if (rec.existed) rows[rec.key] = rec.old_row;
            else rows.erase(rec.key);
            st.undo_logged.erase({rec.table, rec.key});
            st.undo.pop_back();
          }
          raise(Errc::ConstraintViolation,
                key.empty() ? "NULL in key column of " + stmt.table
                            : "duplicate key inserted into " + stmt.table);
        }
        log_undo(st, ti, key);
        t.rows.emplace(std::move(key), std::move(row));
        ++rs.affected;
      }
      return rs;
    }

    case StatementKind::Update: {
      // Merged updates guard every CASE arm with the row's full primary key;
      // resolving arms by key lookup instead of a linear guard scan keeps a
      // k-member merged statement linear in k rather than quadratic.  Any
      // guard that is not a plain full-key equality falls back to the scan,
      // which preserves evaluation-order and type-check behavior exactly.
      std::vector<CaseArmIndex> arm_index(stmt.assignments.size());
      for (size_t ai = 0; ai < stmt.assignments.size(); ++ai)
        arm_index[ai] = index_case_arms(stmt.assignments[ai].expr, def);

      for (const KeyTuple& k : matched) {
        log_undo(st, ti, k);
        std::vector<Value>& row = t.rows[k];
        const std::vector<Value> old_row = row;
        for (size_t ai = 0; ai < stmt.assignments.size(); ++ai) {
          const Assignment& a = stmt.assignments[ai];
          const CaseArmIndex& idx = arm_index[ai];
          Value v;
          if (idx.usable) {
            auto hit = idx.by_key.find(k);
            const AssignExpr& arm =
                hit == idx.by_key.end() ? a.expr.else_expr[0] : *hit->second;
            v = eval_assign(arm, a.column, old_row, def);
          } else {
            v = eval_assign(a.expr, a.column, old_row, def);
          }
          int ci = def.require_column(a.column);
          check_cell_type(v, def.column(ci), stmt.table);
          row[static_cast<size_t>(ci)] = std::move(v);
        }
        ++rs.affected;
      }
      return rs;
    }

    case StatementKind::Delete: {
      for (const KeyTuple& k : matched) {
        log_undo(st, ti, k);
        t.rows.erase(k);
        ++rs.affected;
      }
      return rs;
    }
  }
  raise(Errc::InternalError, "bad statement kind");
}

ResultSet Engine::execute(TxnId txn, const Statement& stmt,
                          const std::vector<Value>& args) {
  std::unique_lock lk(mtx_);
  TxnState* st = &require_txn(txn);
  // Fully literal statements (the common case for merged plans) skip the
  // deep copy bind() would make; bind still runs when arguments are present
  // or expected, so arity errors surface exactly as before.
  Statement bound_storage;
  const bool direct = args.empty() && stmt.is_bound();
  if (!direct) bound_storage = stmt.bind(args);
  const Statement& bound = direct ? stmt : bound_storage;

  int ti = table_index(bound.table);
  const TableDef& def = table_def(ti);
  TableData& t = tables_[static_cast<size_t>(ti)];

  bool exclusive = bound.kind != StatementKind::Select || bound.for_update;
  auto deadline = std::chrono::steady_clock::now() + opts_.lock_timeout;

  // Lock stabilization: match rows, acquire locks; any wait can invalidate
  // the matched set (rows appear or vanish), so re-match until a pass
  // acquires everything without blocking.  The final pass's matched set is
  // still current when the statement applies (the engine mutex is held from
  // that match through the apply), so apply_locked reuses it.
  std::vector<KeyTuple> needed;
  for (;;) {
    needed.clear();
    if (bound.kind == StatementKind::Insert) {
      for (const auto& src : bound.insert_rows) {
        std::vector<int> col_idx;
        KeyTuple key(def.key_indices().size(), Value::null());
        for (size_t i = 0; i < bound.insert_columns.size(); ++i) {
          int ci = def.require_column(bound.insert_columns[i]);
          for (size_t kpos = 0; kpos < def.key_indices().size(); ++kpos)
            if (def.key_indices()[kpos] == ci &&
                src[i].kind == Operand::Kind::Literal)
              key[kpos] = src[i].literal;
        }
        needed.push_back(std::move(key));
      }
    } else {
      needed = match_rows(t, def, bound.predicate);
    }

    bool waited = false;
    for (const KeyTuple& key : needed) {
      LockKey lkey{ti, key};
      while (!try_acquire(txn, *st, lkey, exclusive)) {
        waited = true;
        ++stats_.lock_waits;
        if (cv_.wait_until(lk, deadline) == std::cv_status::timeout &&
            !try_acquire(txn, *st, lkey, exclusive)) {
          st = &require_txn(txn);
          abort_locked(txn, *st);
          ++stats_.aborts;
          txns_.erase(txn);
          cv_.notify_all();
          raise(Errc::Retryable, "lock wait timed out on " + bound.table);
        }
        st = &require_txn(txn);
      }
      if (waited) break;
    }
    if (!waited) break;
  }

  ResultSet rs = apply_locked(*st, bound);
  ++stats_.statements_executed;
  ++st->statements_run;
  if (st->fault_after && *st->fault_after == st->statements_run) {
    abort_locked(txn, *st);
    ++stats_.aborts;
    txns_.erase(txn);
    cv_.notify_all();
    raise(Errc::Retryable, "injected fault after statement " +
                               std::to_string(st->statements_run));
  }
  return rs;
}

Snapshot Engine::snapshot() const {
  std::unique_lock lk(mtx_);
  if (!txns_.empty())
    raise(Errc::ActiveTxn, "snapshot requires a quiescent engine");
  std::ostringstream out;
  for (size_t ti = 0; ti < tables_.size(); ++ti) {
    const TableDef& def = table_def(static_cast<int>(ti));
    out << "table " << def.name() << "\n";
    for (const auto& [key, row] : tables_[ti].rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ",";
        out << def.column(static_cast<int>(i)).name << "=" << row[i].to_sql();
      }
      out << "\n";
    }
  }
  Snapshot snap;
  snap.dump = out.str();
  snap.digest = fnv1a(snap.dump);
  return snap;
}

std::unique_ptr<Engine> Engine::clone() const {
  std::unique_lock lk(mtx_);
  if (!txns_.empty())
    raise(Errc::ActiveTxn, "clone requires a quiescent engine");
  auto copy = std::make_unique<Engine>(schema_, opts_);
  copy->tables_ = tables_;
  return copy;
}

EngineStats Engine::stats() const {
  std::unique_lock lk(mtx_);
  return stats_;
}

void Engine::arm_fault(int after_statements) {
  std::unique_lock lk(mtx_);
  if (after_statements < 1)
    raise(Errc::ValidationError, "fault position must be >= 1");
  armed_fault_ = after_statements;
}

std::optional<std::vector<Value>> Engine::row(const std::string& table,
                                              const KeyTuple& key) const {
  std::unique_lock lk(mtx_);
  const TableData& t = tables_[static_cast<size_t>(table_index(table))];
  auto it = t.rows.find(key);
  if (it == t.rows.end()) return std::nullopt;
  return it->second;
}

size_t Engine::table_size(const std::string& table) const {
  std::unique_lock lk(mtx_);
  return tables_[static_cast<size_t>(table_index(table))].rows.size();
}

size_t Engine::active_transactions() const {
  std::unique_lock lk(mtx_);
  return txns_.size();
}

}  // namespace txmerge
