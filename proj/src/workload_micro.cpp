#include "txmerge/workload.hpp"

namespace txmerge::workload {

namespace {

Operand lit_i(int64_t v) { return Operand::lit(Value::integer(v)); }

}  // namespace

Schema micro_schema() {
  return Schema({TableDef("t", {{"id", Value::Type::Integer, true},
                                {"value", Value::Type::Integer, false}})});
}

void load_micro(Engine& eng, int rows, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int64_t> val(0, 999'999);
  for (int64_t id = 1; id <= rows; ++id)
    eng.load_row("t", {Value::integer(id), Value::integer(val(rng))});
}

std::unique_ptr<Engine> make_micro_engine(int rows, uint64_t seed,
                                          EngineOptions opts) {
  auto eng = std::make_unique<Engine>(micro_schema(), opts);
  load_micro(*eng, rows, seed);
  return eng;
}

Statement micro_select(int64_t id) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "t";
  s.projection = {ProjItem::col("value")};
  s.predicate = Predicate::eq("id", lit_i(id));
  return s;
}

Statement micro_insert(int64_t id, int64_t value) {
  Statement s;
  s.kind = StatementKind::Insert;
  s.table = "t";
  s.insert_columns = {"id", "value"};
  s.insert_rows = {{lit_i(id), lit_i(value)}};
  return s;
}

Statement micro_update_set(int64_t id, int64_t value) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::set(lit_i(value))}};
  s.predicate = Predicate::eq("id", lit_i(id));
  return s;
}

Statement micro_update_delta(int64_t id, int64_t by) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::plus("value", lit_i(by))}};
  s.predicate = Predicate::eq("id", lit_i(id));
  return s;
}

Statement micro_delete(int64_t id) {
  Statement s;
  s.kind = StatementKind::Delete;
  s.table = "t";
  s.predicate = Predicate::eq("id", lit_i(id));
  return s;
}

}  // namespace txmerge::workload
