#include "doctest.h"
#include "txmerge/render.hpp"
#include "txmerge/statement.hpp"
#include "txmerge/template_io.hpp"

using namespace txmerge;

namespace {

Schema micro_schema() {
  return Schema({TableDef("t", {{"id", Value::Type::Integer, true},
                                {"value", Value::Type::Integer, false}})});
}

Statement select_value_by_id() {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "t";
  s.projection = {ProjItem::col("value")};
  s.predicate = Predicate::eq("id", Operand::param(0));
  s.reads = {"id", "value"};
  return s;
}

}  // namespace

TEST_CASE("bind substitutes parameters and checks arity") {
  Statement s = select_value_by_id();
  CHECK(s.param_count() == 1);
  CHECK_FALSE(s.is_bound());

  Statement b = s.bind({Value::integer(3)});
  CHECK(b.is_bound());
  CHECK(render_sql(b) == "SELECT value FROM t WHERE id = 3");

  CHECK_THROWS_AS(s.bind({}), Error);
  CHECK_THROWS_AS(s.bind({Value::integer(1), Value::integer(2)}), Error);
  CHECK_THROWS_AS(render_sql(s), Error);  // unbound
  CHECK(render_shape(s) == "SELECT value FROM t WHERE id = ?");
}

TEST_CASE("canonical rendering of the four statement kinds") {
  Schema schema = micro_schema();

  Statement ins;
  ins.kind = StatementKind::Insert;
  ins.table = "t";
  ins.insert_columns = {"id", "value"};
  ins.insert_rows = {{Operand::lit(Value::integer(1)), Operand::lit(Value::integer(10))},
                     {Operand::lit(Value::integer(2)), Operand::lit(Value::integer(20))}};
  validate_statement(ins, schema);
  CHECK(render_sql(ins) == "INSERT INTO t (id, value) VALUES (1, 10), (2, 20)");
  CHECK(ins.writes == std::set<std::string>{"id", "value"});

  Statement upd;
  upd.kind = StatementKind::Update;
  upd.table = "t";
  upd.assignments = {{"value", AssignExpr::case_when(
      {CaseBranch{Predicate::eq("id", Operand::lit(Value::integer(3))),
                  AssignExpr::set(Operand::lit(Value::integer(5)))},
       CaseBranch{Predicate::eq("id", Operand::lit(Value::integer(7))),
                  AssignExpr::set(Operand::lit(Value::integer(9)))}},
      AssignExpr::self())}};
  upd.predicate = Predicate::in("id", {Operand::lit(Value::integer(3)),
                                       Operand::lit(Value::integer(7))});
  upd.reads = {"id"};
  upd.writes = {"value"};
  validate_statement(upd, schema);
  CHECK(render_sql(upd) ==
        "UPDATE t SET value = CASE WHEN id = 3 THEN 5 WHEN id = 7 THEN 9 "
        "ELSE value END WHERE id IN (3, 7)");

  Statement del;
  del.kind = StatementKind::Delete;
  del.table = "t";
  del.predicate = Predicate::in("id", {Operand::lit(Value::integer(3)),
                                       Operand::lit(Value::integer(7))});
  del.reads = {"id"};
  validate_statement(del, schema);
  CHECK(render_sql(del) == "DELETE FROM t WHERE id IN (3, 7)");
  CHECK(del.writes.count("value") == 1);  // conservative delete write set
}

TEST_CASE("rendering covers aliases, FOR UPDATE, aggregates, deltas") {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "district";
  s.projection = {ProjItem::col("d_next_o_id", "next_id"), ProjItem::col("d_tax")};
  s.predicate = Predicate::conj({Predicate::eq("d_w_id", Operand::lit(Value::integer(1))),
                                 Predicate::eq("d_id", Operand::lit(Value::integer(2)))});
  s.for_update = true;
  CHECK(render_sql(s) ==
        "SELECT d_next_o_id AS next_id, d_tax FROM district "
        "WHERE d_w_id = 1 AND d_id = 2 FOR UPDATE");

  Statement agg;
  agg.kind = StatementKind::Select;
  agg.table = "line_items";
  agg.projection = {ProjItem::col("order_id"), ProjItem::sum_product("price", "quantity")};
  agg.predicate = Predicate::in("order_id", {Operand::lit(Value::integer(1)),
                                             Operand::lit(Value::integer(2))});
  agg.group_by = {"order_id"};
  CHECK(render_sql(agg) ==
        "SELECT order_id, SUM(price * quantity) FROM line_items "
        "WHERE order_id IN (1, 2) GROUP BY order_id");

  Statement delta;
  delta.kind = StatementKind::Update;
  delta.table = "customer";
  delta.assignments = {
      {"c_balance", AssignExpr::plus("c_balance", Operand::lit(Value::decimal("-10.50")))},
      {"c_payment_cnt", AssignExpr::plus("c_payment_cnt", Operand::lit(Value::integer(1)))}};
  delta.predicate = Predicate::eq("c_id", Operand::lit(Value::integer(5)));
  CHECK(render_sql(delta) ==
        "UPDATE customer SET c_balance = c_balance - 10.50, "
        "c_payment_cnt = c_payment_cnt + 1 WHERE c_id = 5");
}

TEST_CASE("dialect capabilities") {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "stock";
  s.projection = {ProjItem::col("s_quantity")};
  s.predicate = Predicate::tuple_in(
      {"s_w_id", "s_i_id"},
      {{Operand::lit(Value::integer(1)), Operand::lit(Value::integer(3))},
       {Operand::lit(Value::integer(2)), Operand::lit(Value::integer(4))}});

  CHECK(render_sql(s, Dialect::by_name("mysql")) ==
        "SELECT s_quantity FROM stock WHERE (s_w_id, s_i_id) IN ((1, 3), (2, 4))");
  CHECK(render_sql(s, Dialect::by_name("mssql")) ==
        "SELECT s_quantity FROM stock WHERE (s_w_id = 1 AND s_i_id = 3) "
        "OR (s_w_id = 2 AND s_i_id = 4)");

  Statement ins;
  ins.kind = StatementKind::Insert;
  ins.table = "t";
  ins.insert_columns = {"id", "value"};
  ins.insert_rows = {{Operand::lit(Value::integer(1)), Operand::lit(Value::integer(10))},
                     {Operand::lit(Value::integer(2)), Operand::lit(Value::integer(20))}};
  CHECK_THROWS_AS(render_sql(ins, Dialect::by_name("oracle")), Error);
  CHECK_THROWS_AS(Dialect::by_name("nosuch"), Error);
}

TEST_CASE("validation rejects malformed statements") {
  Schema schema = micro_schema();

  Statement bad = select_value_by_id();
  bad.table = "missing";
  CHECK_THROWS_AS(validate_statement(bad, schema), Error);

  Statement uncovered = select_value_by_id();
  uncovered.reads = {"value"};  // predicate references id
  CHECK_THROWS_AS(validate_statement(uncovered, schema), Error);

  Statement writesel = select_value_by_id();
  writesel.writes = {"value"};
  CHECK_THROWS_AS(validate_statement(writesel, schema), Error);

  Statement keyassign;
  keyassign.kind = StatementKind::Update;
  keyassign.table = "t";
  keyassign.assignments = {{"id", AssignExpr::set(Operand::lit(Value::integer(1)))}};
  keyassign.writes = {"id"};
  CHECK_THROWS_AS(validate_statement(keyassign, schema), Error);

  Statement empty_in = select_value_by_id();
  empty_in.predicate = Predicate::in("id", {});
  CHECK_THROWS_AS(validate_statement(empty_in, schema), Error);

  Statement no_key_insert;
  no_key_insert.kind = StatementKind::Insert;
  no_key_insert.table = "t";
  no_key_insert.insert_columns = {"value"};
  no_key_insert.insert_rows = {{Operand::lit(Value::integer(1))}};
  CHECK_THROWS_AS(validate_statement(no_key_insert, schema), Error);
}

TEST_CASE("template json round trip") {
  Schema schema = micro_schema();
  TransactionTemplate tmpl;
  tmpl.name = "micro_update";
  tmpl.partition_key = {"id"};
  TemplateStatement ts;
  ts.stmt.kind = StatementKind::Update;
  ts.stmt.table = "t";
  ts.stmt.assignments = {{"value", AssignExpr::set(Operand::param(0))}};
  ts.stmt.predicate = Predicate::eq("id", Operand::param(1));
  ts.stmt.reads = {"id"};
  ts.stmt.writes = {"value"};
  tmpl.statements.push_back(ts);
  validate_template(tmpl, schema);

  nlohmann::json j = template_to_json(tmpl);
  TransactionTemplate back = template_from_json(j, schema);
  CHECK(back.name == tmpl.name);
  CHECK(back.partition_key == tmpl.partition_key);
  REQUIRE(back.size() == 1);
  CHECK(back.stmt(1) == tmpl.stmt(1));

  // Structured JSON carries no raw SQL.
  CHECK(j.dump().find("UPDATE") == std::string::npos);
}

TEST_CASE("predicate json round trip covers every node kind") {
  Predicate p = Predicate::disj(
      {Predicate::conj({Predicate::eq("a", Operand::param(0)),
                        Predicate::in("b", {Operand::lit(Value::integer(1)),
                                            Operand::param(2)})}),
       Predicate::tuple_in({"a", "b"}, {{Operand::lit(Value::integer(1)),
                                         Operand::lit(Value::text("x"))}})});
  Predicate back = predicate_from_json(predicate_to_json(p));
  CHECK(back == p);
}
