#include <atomic>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "txmerge/engine.hpp"

using namespace txmerge;
using namespace std::chrono_literals;

namespace {

Schema micro_schema() {
  return Schema({TableDef("t", {{"id", Value::Type::Integer, true},
                                {"value", Value::Type::Integer, false}})});
}

Schema lines_schema() {
  return Schema({TableDef("line_items", {{"order_id", Value::Type::Integer, true},
                                         {"line_no", Value::Type::Integer, true},
                                         {"quantity", Value::Type::Integer, false},
                                         {"price", Value::Type::Decimal, false}})});
}

Statement point_select(int64_t id) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "t";
  s.projection = {ProjItem::col("value")};
  s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
  return s;
}

Statement point_update(int64_t id, int64_t value) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::set(Operand::lit(Value::integer(value)))}};
  s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
  return s;
}

Statement insert_row(int64_t id, int64_t value) {
  Statement s;
  s.kind = StatementKind::Insert;
  s.table = "t";
  s.insert_columns = {"id", "value"};
  s.insert_rows = {{Operand::lit(Value::integer(id)), Operand::lit(Value::integer(value))}};
  return s;
}

}  // namespace

TEST_CASE("basic read-write cycle with commit") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});

  TxnId t = eng.begin();
  ResultSet rs = eng.execute(t, point_select(1));
  REQUIRE(rs.rows.size() == 1);
  CHECK(rs.at(0, "value") == Value::integer(10));
  ResultSet upd = eng.execute(t, point_update(1, 99));
  CHECK(upd.affected == 1);
  eng.commit(t);

  CHECK(eng.row("t", {Value::integer(1)})->at(1) == Value::integer(99));
  CHECK(eng.stats().statements_executed == 2);
}

TEST_CASE("abort rolls back every effect") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});
  Snapshot before = eng.snapshot();

  TxnId t = eng.begin();
  eng.execute(t, point_update(1, 50));
  eng.execute(t, insert_row(2, 20));
  Statement del;
  del.kind = StatementKind::Delete;
  del.table = "t";
  del.predicate = Predicate::eq("id", Operand::lit(Value::integer(1)));
  eng.execute(t, del);
  eng.abort(t);

  CHECK(eng.snapshot() == before);
  CHECK(eng.stats().aborts == 1);
}

TEST_CASE("writer blocks a second writer until commit") {
  Engine eng(micro_schema(), EngineOptions{.lock_timeout = 2000ms});
  eng.load_row("t", {Value::integer(1), Value::integer(0)});

  TxnId a = eng.begin();
  eng.execute(a, point_update(1, 1));

  std::atomic<bool> b_done{false};
  std::thread other([&] {
    TxnId b = eng.begin();
    eng.execute(b, point_update(1, 2));
    b_done = true;
    eng.commit(b);
  });
  std::this_thread::sleep_for(100ms);
  CHECK_FALSE(b_done.load());
  eng.commit(a);
  other.join();
  CHECK(b_done.load());
  CHECK(eng.row("t", {Value::integer(1)})->at(1) == Value::integer(2));
  CHECK(eng.stats().lock_waits > 0);
}

TEST_CASE("lock timeout aborts the waiter with Retryable") {
  Engine eng(micro_schema(), EngineOptions{.lock_timeout = 50ms});
  eng.load_row("t", {Value::integer(1), Value::integer(0)});

  TxnId a = eng.begin();
  eng.execute(a, point_update(1, 1));

  TxnId b = eng.begin();
  eng.execute(b, insert_row(7, 70));  // b holds some work that must roll back
  try {
    eng.execute(b, point_update(1, 2));
    FAIL("expected Retryable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Retryable);
  }
  // b self-aborted: its insert is gone and its locks are released.
  eng.commit(a);
  CHECK_FALSE(eng.row("t", {Value::integer(7)}).has_value());
  CHECK(eng.active_transactions() == 0);
  CHECK(eng.stats().aborts == 1);
}

TEST_CASE("shared readers coexist, FOR UPDATE excludes them") {
  Engine eng(micro_schema(), EngineOptions{.lock_timeout = 50ms});
  eng.load_row("t", {Value::integer(1), Value::integer(10)});

  TxnId a = eng.begin();
  TxnId b = eng.begin();
  eng.execute(a, point_select(1));
  eng.execute(b, point_select(1));  // no block: both shared
  eng.commit(a);
  eng.commit(b);

  TxnId c = eng.begin();
  Statement locked = point_select(1);
  locked.for_update = true;
  eng.execute(c, locked);
  TxnId d = eng.begin();
  CHECK_THROWS_AS(eng.execute(d, point_select(1)), Error);  // timeout
  eng.commit(c);
}

TEST_CASE("duplicate insert rolls back only the failed statement") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});

  TxnId t = eng.begin();
  eng.execute(t, point_update(1, 77));

  Statement multi;
  multi.kind = StatementKind::Insert;
  multi.table = "t";
  multi.insert_columns = {"id", "value"};
  multi.insert_rows = {
      {Operand::lit(Value::integer(5)), Operand::lit(Value::integer(50))},
      {Operand::lit(Value::integer(1)), Operand::lit(Value::integer(11))}};
  try {
    eng.execute(t, multi);
    FAIL("expected ConstraintViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstraintViolation);
  }
  // Row 5 from the failed statement must be gone, the earlier update kept.
  CHECK_FALSE(eng.row("t", {Value::integer(5)}).has_value());
  eng.commit(t);
  CHECK(eng.row("t", {Value::integer(1)})->at(1) == Value::integer(77));
}

TEST_CASE("snapshot digests are deterministic and guard quiescence") {
  Engine a(micro_schema());
  Engine b(micro_schema());
  for (int i = 0; i < 10; ++i) {
    a.load_row("t", {Value::integer(i), Value::integer(i * 2)});
    b.load_row("t", {Value::integer(i), Value::integer(i * 2)});
  }
  CHECK(a.snapshot() == b.snapshot());
  CHECK(a.snapshot().hex().size() == 16);

  TxnId t = a.begin();
  CHECK_THROWS_AS(a.snapshot(), Error);
  a.abort(t);

  TxnId u = b.begin();
  b.execute(u, point_update(3, 999));
  b.commit(u);
  CHECK_FALSE(a.snapshot() == b.snapshot());
}

TEST_CASE("clone is deep and independent") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});
  std::unique_ptr<Engine> copy = eng.clone();
  CHECK(copy->snapshot() == eng.snapshot());

  TxnId t = copy->begin();
  copy->execute(t, point_update(1, 0));
  copy->commit(t);
  CHECK(eng.row("t", {Value::integer(1)})->at(1) == Value::integer(10));
  CHECK_FALSE(copy->snapshot() == eng.snapshot());
}

TEST_CASE("injected fault aborts after the k-th statement") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});
  Snapshot before = eng.snapshot();

  eng.arm_fault(2);
  TxnId t = eng.begin();
  eng.execute(t, point_update(1, 50));
  try {
    eng.execute(t, insert_row(2, 20));
    FAIL("expected injected Retryable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Retryable);
  }
  CHECK(eng.active_transactions() == 0);
  CHECK(eng.snapshot() == before);

  // Next transaction runs clean: the fault was one-shot.
  TxnId u = eng.begin();
  eng.execute(u, point_update(1, 60));
  eng.commit(u);
  CHECK(eng.row("t", {Value::integer(1)})->at(1) == Value::integer(60));
}

TEST_CASE("aggregates follow SQL NULL semantics") {
  Engine eng(lines_schema());
  eng.load_row("line_items", {Value::integer(1), Value::integer(1),
                              Value::integer(2), Value::decimal("3.50")});
  eng.load_row("line_items", {Value::integer(1), Value::integer(2),
                              Value::integer(1), Value::decimal("1.25")});
  eng.load_row("line_items", {Value::integer(2), Value::integer(1),
                              Value::integer(4), Value::decimal("0.75")});

  TxnId t = eng.begin();

  Statement global_sum;
  global_sum.kind = StatementKind::Select;
  global_sum.table = "line_items";
  global_sum.projection = {ProjItem::sum("quantity")};
  global_sum.predicate = Predicate::eq("order_id", Operand::lit(Value::integer(1)));
  ResultSet rs = eng.execute(t, global_sum);
  REQUIRE(rs.rows.size() == 1);
  CHECK(rs.rows[0][0] == Value::integer(3));

  // Aggregate over zero rows still yields one row holding NULL.
  global_sum.predicate = Predicate::eq("order_id", Operand::lit(Value::integer(99)));
  rs = eng.execute(t, global_sum);
  REQUIRE(rs.rows.size() == 1);
  CHECK(rs.rows[0][0].is_null());

  Statement grouped;
  grouped.kind = StatementKind::Select;
  grouped.table = "line_items";
  grouped.projection = {ProjItem::col("order_id"),
                        ProjItem::sum_product("price", "quantity")};
  grouped.predicate = Predicate::in("order_id", {Operand::lit(Value::integer(1)),
                                                 Operand::lit(Value::integer(2))});
  grouped.group_by = {"order_id"};
  rs = eng.execute(t, grouped);
  REQUIRE(rs.rows.size() == 2);
  CHECK(rs.rows[0][0] == Value::integer(1));
  CHECK(rs.rows[0][1] == Value::decimal("8.25"));  // 2*3.50 + 1*1.25
  CHECK(rs.rows[1][0] == Value::integer(2));
  CHECK(rs.rows[1][1] == Value::decimal("3.00"));

  // Grouped aggregate over zero rows yields zero rows.
  grouped.predicate = Predicate::eq("order_id", Operand::lit(Value::integer(99)));
  rs = eng.execute(t, grouped);
  CHECK(rs.rows.empty());
  eng.commit(t);
}

TEST_CASE("type discipline on writes and comparisons") {
  Engine eng(micro_schema());
  eng.load_row("t", {Value::integer(1), Value::integer(10)});

  TxnId t = eng.begin();
  Statement bad_write = point_update(1, 0);
  bad_write.assignments = {{"value", AssignExpr::set(Operand::lit(Value::text("x")))}};
  CHECK_THROWS_AS(eng.execute(t, bad_write), Error);
  eng.abort(t);

  CHECK_THROWS_AS(eng.load_row("t", {Value::text("k"), Value::integer(1)}), Error);

  TxnId u = eng.begin();
  Statement bad_probe = point_select(1);
  bad_probe.predicate = Predicate::eq("id", Operand::lit(Value::text("1")));
  CHECK_THROWS_AS(eng.execute(u, bad_probe), Error);
  eng.abort(u);
}

TEST_CASE("merged statements execute as single statements") {
  Engine eng(micro_schema());
  for (int i = 0; i < 10; ++i)
    eng.load_row("t", {Value::integer(i), Value::integer(0)});
  uint64_t before = eng.stats().statements_executed;

  TxnId t = eng.begin();
  Statement upd;
  upd.kind = StatementKind::Update;
  upd.table = "t";
  upd.assignments = {{"value", AssignExpr::plus("value", Operand::lit(Value::integer(1)))}};
  upd.predicate = Predicate::in("id", {Operand::lit(Value::integer(1)),
                                       Operand::lit(Value::integer(2)),
                                       Operand::lit(Value::integer(3))});
  ResultSet rs = eng.execute(t, upd);
  CHECK(rs.affected == 3);
  eng.commit(t);
  CHECK(eng.stats().statements_executed - before == 1);
}
