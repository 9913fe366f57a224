#include <random>

#include "doctest.h"
#include "txmerge/engine.hpp"
#include "txmerge/rewriter.hpp"

using namespace txmerge;

namespace {

Schema shop_schema() {
  return Schema({
      TableDef("customer", {{"c_w_id", Value::Type::Integer, true},
                            {"c_d_id", Value::Type::Integer, true},
                            {"c_id", Value::Type::Integer, true},
                            {"c_discount", Value::Type::Decimal, false},
                            {"c_balance", Value::Type::Decimal, false}}),
      TableDef("t", {{"id", Value::Type::Integer, true},
                     {"value", Value::Type::Integer, false}}),
      TableDef("line_items", {{"order_id", Value::Type::Integer, true},
                              {"line_no", Value::Type::Integer, true},
                              {"quantity", Value::Type::Integer, false}}),
  });
}

Statement customer_select(int64_t w, int64_t d, int64_t c) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "customer";
  s.projection = {ProjItem::col("c_discount")};
  s.predicate = Predicate::conj({
      Predicate::eq("c_w_id", Operand::lit(Value::integer(w))),
      Predicate::eq("c_d_id", Operand::lit(Value::integer(d))),
      Predicate::eq("c_id", Operand::lit(Value::integer(c)))});
  s.reads = {"c_w_id", "c_d_id", "c_id", "c_discount"};
  return s;
}

Statement value_update(int64_t id, int64_t v) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::set(Operand::lit(Value::integer(v)))}};
  s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
  s.reads = {"id"};
  s.writes = {"value"};
  return s;
}

Statement delta_update(int64_t id, int64_t d) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::plus("value", Operand::lit(Value::integer(d)))}};
  s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
  s.reads = {"id"};
  s.writes = {"value"};
  return s;
}

}  // namespace

TEST_CASE("merge_selects folds shared equalities and keys into IN") {
  std::vector<SourceStatement> batch = {{1, customer_select(1, 2, 3)},
                                        {2, customer_select(1, 2, 7)}};
  MergedSelect m = merge_selects(batch);
  CHECK(render_sql(m.stmt) ==
        "SELECT c_id, c_discount FROM customer "
        "WHERE c_w_id = 1 AND c_d_id = 2 AND c_id IN (3, 7)");
  CHECK(m.added_key_columns == 1);
  CHECK(m.dispatch.mode == DispatchMap::Mode::Keyed);
  CHECK(m.dispatch.routes.at({Value::integer(3)}) == std::vector<int>{1});
  CHECK(m.dispatch.routes.at({Value::integer(7)}) == std::vector<int>{2});
}

TEST_CASE("merge_selects with several differing columns uses tuple IN") {
  std::vector<SourceStatement> batch = {{1, customer_select(1, 2, 3)},
                                        {2, customer_select(4, 5, 6)}};
  MergedSelect m = merge_selects(batch);
  CHECK(render_sql(m.stmt) ==
        "SELECT c_w_id, c_d_id, c_id, c_discount FROM customer "
        "WHERE (c_w_id, c_d_id, c_id) IN ((1, 2, 3), (4, 5, 6))");
  CHECK(m.added_key_columns == 3);
}

TEST_CASE("merge_selects on identical statements becomes a broadcast") {
  std::vector<SourceStatement> batch = {{1, customer_select(1, 2, 3)},
                                        {2, customer_select(1, 2, 3)},
                                        {3, customer_select(1, 2, 3)}};
  MergedSelect m = merge_selects(batch);
  CHECK(m.stmt == batch[0].stmt);  // untouched
  CHECK(m.dispatch.mode == DispatchMap::Mode::Broadcast);
  CHECK(m.dispatch.invocations == std::vector<int>{1, 2, 3});
}

TEST_CASE("merge_selects is the identity on a singleton batch") {
  std::vector<SourceStatement> batch = {{5, customer_select(1, 2, 3)}};
  MergedSelect m = merge_selects(batch);
  CHECK(m.stmt == batch[0].stmt);
  CHECK(m.added_key_columns == 0);
}

TEST_CASE("duplicate keys route one row to several invocations") {
  std::vector<SourceStatement> batch = {{1, customer_select(1, 2, 3)},
                                        {2, customer_select(1, 2, 3)},
                                        {3, customer_select(1, 2, 9)}};
  MergedSelect m = merge_selects(batch);
  CHECK(render_sql(m.stmt) ==
        "SELECT c_id, c_discount FROM customer "
        "WHERE c_w_id = 1 AND c_d_id = 2 AND c_id IN (3, 9)");
  CHECK(m.dispatch.routes.at({Value::integer(3)}) == std::vector<int>{1, 2});

  ResultSet merged;
  merged.columns = {"c_id", "c_discount"};
  merged.rows = {{Value::integer(3), Value::decimal("0.10")},
                 {Value::integer(9), Value::decimal("0.20")}};
  std::map<int, ResultSet> per_inv = dispatch_results(merged, m);
  REQUIRE(per_inv.size() == 3);
  CHECK(per_inv.at(1).rows.size() == 1);
  CHECK(per_inv.at(2).rows.size() == 1);
  CHECK(per_inv.at(1).rows[0][0] == Value::decimal("0.10"));
  CHECK(per_inv.at(3).rows[0][0] == Value::decimal("0.20"));
  CHECK(per_inv.at(1).columns == std::vector<std::string>{"c_discount"});
}

TEST_CASE("dispatch raises OrphanRow for unrouteable rows") {
  std::vector<SourceStatement> batch = {{1, customer_select(1, 2, 3)},
                                        {2, customer_select(1, 2, 7)}};
  MergedSelect m = merge_selects(batch);
  ResultSet merged;
  merged.columns = {"c_id", "c_discount"};
  merged.rows = {{Value::integer(4), Value::decimal("0.10")}};
  CHECK_THROWS_AS(dispatch_results(merged, m), Error);
}

TEST_CASE("merge_selects adds GROUP BY for aggregate selects") {
  auto sum_select = [](int64_t order) {
    Statement s;
    s.kind = StatementKind::Select;
    s.table = "line_items";
    s.projection = {ProjItem::sum("quantity")};
    s.predicate = Predicate::eq("order_id", Operand::lit(Value::integer(order)));
    s.reads = {"order_id", "quantity"};
    return s;
  };
  std::vector<SourceStatement> batch = {{1, sum_select(11)}, {2, sum_select(12)}};
  MergedSelect m = merge_selects(batch);
  CHECK(render_sql(m.stmt) ==
        "SELECT order_id, SUM(quantity) FROM line_items "
        "WHERE order_id IN (11, 12) GROUP BY order_id");

  // Orders with no rows simply produce no group; dispatch must not orphan.
  ResultSet merged;
  merged.columns = {"order_id", "sum_quantity"};
  merged.rows = {{Value::integer(11), Value::integer(5)}};
  std::map<int, ResultSet> per_inv = dispatch_results(merged, m);
  CHECK(per_inv.at(1).rows.size() == 1);
  CHECK(per_inv.at(2).rows.empty());
}

TEST_CASE("merge_selects falls back to OR for non-equality shapes") {
  auto in_select = [](std::vector<int64_t> ids) {
    Statement s;
    s.kind = StatementKind::Select;
    s.table = "t";
    s.projection = {ProjItem::col("value")};
    std::vector<Operand> ops;
    for (int64_t id : ids) ops.push_back(Operand::lit(Value::integer(id)));
    s.predicate = Predicate::in("id", std::move(ops));
    s.reads = {"id", "value"};
    return s;
  };
  std::vector<SourceStatement> batch = {{1, in_select({1, 2})}, {2, in_select({3})}};
  MergedSelect m = merge_selects(batch);
  CHECK(render_sql(m.stmt) ==
        "SELECT id, value FROM t WHERE (id IN (1, 2)) OR (id IN (3))");
  CHECK(m.dispatch.mode == DispatchMap::Mode::ByPredicate);

  ResultSet merged;
  merged.columns = {"id", "value"};
  merged.rows = {{Value::integer(2), Value::integer(20)},
                 {Value::integer(3), Value::integer(30)}};
  std::map<int, ResultSet> per_inv = dispatch_results(merged, m);
  CHECK(per_inv.at(1).rows.size() == 1);
  CHECK(per_inv.at(1).rows[0][0] == Value::integer(20));
  CHECK(per_inv.at(2).rows[0][0] == Value::integer(30));
}

TEST_CASE("merge_selects rejects mismatched shapes") {
  Statement a = customer_select(1, 2, 3);
  Statement b = customer_select(1, 2, 7);
  b.projection = {ProjItem::col("c_balance")};
  CHECK_THROWS_AS(merge_selects({{1, a}, {2, b}}), Error);

  Statement c = customer_select(1, 2, 7);
  c.for_update = true;
  CHECK_THROWS_AS(merge_selects({{1, a}, {2, c}}), Error);
}

TEST_CASE("merge_inserts concatenates rows in batch order") {
  auto ins = [](int64_t id, int64_t v) {
    Statement s;
    s.kind = StatementKind::Insert;
    s.table = "t";
    s.insert_columns = {"id", "value"};
    s.insert_rows = {{Operand::lit(Value::integer(id)), Operand::lit(Value::integer(v))}};
    s.writes = {"id", "value"};
    return s;
  };
  Statement m = merge_inserts({{1, ins(1, 10)}, {2, ins(2, 20)}, {3, ins(3, 30)}});
  CHECK(render_sql(m) == "INSERT INTO t (id, value) VALUES (1, 10), (2, 20), (3, 30)");
  CHECK(m.insert_rows.size() == 3);

  Statement other = ins(4, 40);
  other.insert_columns = {"value", "id"};
  other.insert_rows = {{Operand::lit(Value::integer(40)), Operand::lit(Value::integer(4))}};
  CHECK_THROWS_AS(merge_inserts({{1, ins(1, 10)}, {2, other}}), Error);
}

TEST_CASE("merge_updates builds CASE WHEN with self-preserving ELSE") {
  Statement m = merge_updates({{1, value_update(3, 5)}, {2, value_update(7, 9)}});
  CHECK(render_sql(m) ==
        "UPDATE t SET value = CASE WHEN id = 3 THEN 5 WHEN id = 7 THEN 9 "
        "ELSE value END WHERE id IN (3, 7)");
}

TEST_CASE("merge_updates collapses identical assignments to a plain set") {
  Statement a = value_update(3, 42);
  Statement b = value_update(7, 42);
  Statement m = merge_updates({{1, a}, {2, b}});
  CHECK(render_sql(m) == "UPDATE t SET value = 42 WHERE id IN (3, 7)");
}

TEST_CASE("extra where keys disable the collapse and feed the ELSE arm") {
  Statement a = value_update(3, 42);
  Statement b = value_update(7, 42);
  Statement m = merge_updates({{1, a}, {2, b}}, {{Value::integer(9)}});
  CHECK(render_sql(m) ==
        "UPDATE t SET value = CASE WHEN id = 3 THEN 42 WHEN id = 7 THEN 42 "
        "ELSE value END WHERE id IN (3, 7, 9)");
}

TEST_CASE("merge_updates raises KeyCollision on duplicate keys") {
  try {
    merge_updates({{1, value_update(3, 5)}, {2, value_update(3, 9)}});
    FAIL("expected KeyCollision");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::KeyCollision);
  }
}

TEST_CASE("aggregate_delta_updates sums deltas once per row") {
  Statement m = aggregate_delta_updates(
      {{1, delta_update(1, 1)}, {2, delta_update(1, 1)}, {3, delta_update(1, 5)}});
  CHECK(render_sql(m) == "UPDATE t SET value = value + 7 WHERE id = 1");

  // Identity on singleton batches.
  Statement one = aggregate_delta_updates({{1, delta_update(1, 3)}});
  CHECK(one == delta_update(1, 3));

  try {
    aggregate_delta_updates({{1, delta_update(1, 1)}, {2, value_update(1, 9)}});
    FAIL("expected NotCommutative");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotCommutative);
  }
  CHECK_THROWS_AS(aggregate_delta_updates({{1, delta_update(1, 1)},
                                           {2, delta_update(2, 1)}}),
                  Error);
}

TEST_CASE("merge_deletes folds keys into IN") {
  auto del = [](int64_t id) {
    Statement s;
    s.kind = StatementKind::Delete;
    s.table = "t";
    s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
    s.reads = {"id"};
    return s;
  };
  Statement m = merge_deletes({{1, del(3)}, {2, del(7)}, {3, del(3)}});
  CHECK(render_sql(m) == "DELETE FROM t WHERE id IN (3, 7)");
}

TEST_CASE("dedupe_reads collapses only uniform batches") {
  Statement s1 = customer_select(1, 2, 3);
  Statement s2 = customer_select(1, 2, 3);
  std::optional<Statement> same = dedupe_reads({{1, s1}, {2, s2}});
  REQUIRE(same.has_value());
  CHECK(*same == s1);
  CHECK_FALSE(dedupe_reads({{1, s1}, {2, customer_select(1, 2, 4)}}).has_value());
}

TEST_CASE("allocate_sequence hands out consecutive ids") {
  SequenceAllocation a = allocate_sequence(3001, 3);
  CHECK(a.base == 3001);
  CHECK(a.delta == 3);
  CHECK(a.values == std::vector<int64_t>{3001, 3002, 3003});
  CHECK_THROWS_AS(allocate_sequence(1, 0), Error);
}

TEST_CASE("merged select equals per-statement execution on a live engine") {
  Engine eng(shop_schema());
  std::mt19937_64 rng(7);
  for (int64_t c = 1; c <= 20; ++c)
    eng.load_row("customer",
                 {Value::integer(1), Value::integer(2), Value::integer(c),
                  Value::decimal_scaled(static_cast<int64_t>(rng() % 50)),
                  Value::decimal_scaled(0)});

  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<SourceStatement> batch;
    for (int i = 0; i < n; ++i)
      batch.push_back({i, customer_select(1, 2, 1 + static_cast<int64_t>(rng() % 20))});

    MergedSelect m = merge_selects(batch);
    TxnId t = eng.begin();
    ResultSet merged = eng.execute(t, m.stmt);
    std::map<int, ResultSet> routed = dispatch_results(merged, m);
    for (const SourceStatement& src : batch) {
      ResultSet direct = eng.execute(t, src.stmt);
      CHECK(routed.at(src.invocation).rows == direct.rows);
    }
    eng.commit(t);
  }
}
