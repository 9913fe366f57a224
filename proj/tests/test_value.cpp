#include <algorithm>

#include "doctest.h"
#include "txmerge/value.hpp"

using namespace txmerge;

TEST_CASE("decimal parsing and rendering stay exact") {
  CHECK(Value::decimal("25.50").scaled_decimal() == 2550);
  CHECK(Value::decimal("25.5").scaled_decimal() == 2550);
  CHECK(Value::decimal("25").scaled_decimal() == 2500);
  CHECK(Value::decimal("0.07").scaled_decimal() == 7);
  CHECK(Value::decimal("-10.50").scaled_decimal() == -1050);
  CHECK(Value::decimal("-0.01").scaled_decimal() == -1);

  CHECK(Value::decimal_scaled(2550).to_sql() == "25.50");
  CHECK(Value::decimal_scaled(-1050).to_sql() == "-10.50");
  CHECK(Value::decimal_scaled(7).to_sql() == "0.07");
  CHECK(Value::decimal_scaled(-1).to_sql() == "-0.01");
  CHECK(Value::decimal_scaled(0).to_sql() == "0.00");

  CHECK_THROWS_AS(Value::decimal("1.234"), Error);
  CHECK_THROWS_AS(Value::decimal("abc"), Error);
  CHECK_THROWS_AS(Value::decimal(""), Error);
}

TEST_CASE("sql literal forms") {
  CHECK(Value::integer(42).to_sql() == "42");
  CHECK(Value::integer(-7).to_sql() == "-7");
  CHECK(Value::null().to_sql() == "NULL");
  CHECK(Value::text("plain").to_sql() == "'plain'");
  CHECK(Value::text("O'Brien").to_sql() == "'O''Brien'");
  CHECK(Value::timestamp(1723766400000).to_sql() == "1723766400000");
}

TEST_CASE("json round trip preserves type and value") {
  std::vector<Value> vals = {
      Value::null(),          Value::integer(123),
      Value::integer(-5),     Value::decimal("99.99"),
      Value::decimal("-0.50"), Value::text("hello"),
      Value::text(""),        Value::timestamp(1723766400000)};
  for (const Value& v : vals) {
    Value back = Value::from_json(v.to_json());
    CHECK(back == v);
    CHECK(back.type() == v.type());
  }
}

TEST_CASE("values of different types never compare equal") {
  CHECK(Value::integer(5) != Value::decimal_scaled(500));
  CHECK(Value::integer(0) != Value::null());
  CHECK(Value::timestamp(5) != Value::integer(5));
  CHECK(Value::text("5") != Value::integer(5));
}

TEST_CASE("accessor type guards throw") {
  CHECK_THROWS_AS(Value::integer(1).as_text(), Error);
  CHECK_THROWS_AS(Value::text("x").as_integer(), Error);
  CHECK_THROWS_AS((void)Value::null().as_integer(), Error);
}

TEST_CASE("ordering is total across mixed types") {
  std::vector<Value> vals = {Value::text("b"), Value::integer(2), Value::null(),
                             Value::integer(1), Value::text("a")};
  std::sort(vals.begin(), vals.end());
  CHECK(std::is_sorted(vals.begin(), vals.end()));
  CHECK(vals[0] == Value::null());
}
