#include "txmerge/workload.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "txmerge/rewriter.hpp"

namespace txmerge::workload {

using nlohmann::json;

namespace {

constexpr int64_t kEpochMs = 1'700'000'000'000;

Operand lit_i(int64_t v) { return Operand::lit(Value::integer(v)); }
Operand lit_d(int64_t cents) { return Operand::lit(Value::decimal_scaled(cents)); }
Operand lit_ts(int64_t ms) { return Operand::lit(Value::timestamp(ms)); }

// ------------------------------------------------------- statement shapes

Statement count_sum_stmt(Operand order) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "line_items";
  s.projection = {ProjItem::sum("quantity", "item_count")};
  s.predicate = Predicate::eq("order_id", std::move(order));
  return s;
}

Statement total_sum_stmt(Operand order) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = "line_items";
  s.projection = {ProjItem::sum_product("price", "quantity", "item_total")};
  s.predicate = Predicate::eq("order_id", std::move(order));
  return s;
}

Statement totals_update_stmt(Operand order, Operand item_total,
                             Operand item_count, Operand total, Operand ts) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "orders";
  s.assignments = {{"item_total", AssignExpr::set(std::move(item_total))},
                   {"item_count", AssignExpr::set(std::move(item_count))},
                   {"total", AssignExpr::set(std::move(total))},
                   {"updated_at", AssignExpr::set(std::move(ts))}};
  s.predicate = Predicate::eq("id", std::move(order));
  return s;
}

Statement touch_update_stmt(Operand order, Operand ts) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "orders";
  s.assignments = {{"updated_at", AssignExpr::set(std::move(ts))}};
  s.predicate = Predicate::eq("id", std::move(order));
  return s;
}

// --------------------------------------------------------------- arguments

struct OrderTotalArgs {
  int64_t order = 0;
  int64_t ts = 0;

  static OrderTotalArgs parse(const json& a) {
    return {a.at("order_id").get<int64_t>(), a.at("ts").get<int64_t>()};
  }
};

// A SUM over zero matched rows comes back as one NULL cell (no GROUP BY) or
// as no row at all (grouped); both mean "order has no line items".
int64_t sum_or_zero(const Value& v, bool integer_sum) {
  if (v.is_null()) return 0;
  return integer_sum ? v.as_integer() : v.scaled_decimal();
}

// The merged grouped selects omit the order_id column when the batch holds a
// single distinct order; fall back to that order id.
int64_t key_cell_local(const ResultSet& rs, size_t row,
                       const std::string& column, const Value& shared) {
  int idx = rs.column_index(column);
  if (idx < 0) return shared.as_integer();
  return rs.rows[row][static_cast<size_t>(idx)].as_integer();
}

json order_total_result_json(int64_t order, int64_t item_count,
                             int64_t item_total_cents) {
  return json{{"order_id", order},
              {"item_count", item_count},
              {"item_total_cents", item_total_cents},
              {"total_cents", item_total_cents}};
}

json order_total_original(ExecSession& ses, const json& args) {
  OrderTotalArgs a = OrderTotalArgs::parse(args);

  ResultSet rq = ses.run(count_sum_stmt(lit_i(a.order)));
  int64_t item_count = sum_or_zero(rq.at(0, "item_count"), true);
  ResultSet rt = ses.run(total_sum_stmt(lit_i(a.order)));
  int64_t item_total = sum_or_zero(rt.at(0, "item_total"), false);

  ses.run(totals_update_stmt(lit_i(a.order), lit_d(item_total),
                             lit_i(item_count), lit_d(item_total),
                             lit_ts(a.ts)));
  ses.run(touch_update_stmt(lit_i(a.order), lit_ts(a.ts)));
  return order_total_result_json(a.order, item_count, item_total);
}

std::vector<json> order_total_merged_impl(ExecSession& ses,
                                          const std::vector<json>& batch,
                                          const OrderTotalOptions& opts) {
  size_t n = batch.size();
  std::vector<OrderTotalArgs> args;
  args.reserve(n);
  for (const json& a : batch) args.push_back(OrderTotalArgs::parse(a));

  // Duplicate orders in one batch read the same rows and overwrite the same
  // totals, so the statements run once per distinct order; the last member's
  // timestamp wins, exactly as back-to-back serial execution would leave it.
  std::vector<int64_t> distinct;
  std::map<int64_t, int64_t> last_ts;
  for (const OrderTotalArgs& a : args) {
    if (!last_ts.count(a.order)) distinct.push_back(a.order);
    last_ts[a.order] = a.ts;
  }

  // Grouped sums let one select carry every order's aggregate; orders with
  // no line items simply have no group row.
  std::vector<SourceStatement> counts, totals;
  for (size_t j = 0; j < distinct.size(); ++j) {
    counts.push_back({static_cast<int>(j), count_sum_stmt(lit_i(distinct[j]))});
    totals.push_back({static_cast<int>(j), total_sum_stmt(lit_i(distinct[j]))});
  }
  MergedSelect mq = merge_selects(counts);
  ResultSet rq = ses.run(mq);
  MergedSelect mt = merge_selects(totals);
  ResultSet rt = ses.run(mt);

  std::map<int64_t, int64_t> count_of, total_of;
  for (size_t r = 0; r < rq.rows.size(); ++r) {
    int64_t order =
        key_cell_local(rq, r, "order_id", Value::integer(distinct[0]));
    count_of[order] = sum_or_zero(rq.at(r, "item_count"), true);
  }
  for (size_t r = 0; r < rt.rows.size(); ++r) {
    int64_t order =
        key_cell_local(rt, r, "order_id", Value::integer(distinct[0]));
    total_of[order] = sum_or_zero(rt.at(r, "item_total"), false);
  }

  std::vector<KeyTuple> extra_keys;
  if (opts.corrupt_widen_order_id != 0)
    extra_keys.push_back({Value::integer(opts.corrupt_widen_order_id)});

  std::vector<SourceStatement> upd, touch;
  for (size_t j = 0; j < distinct.size(); ++j) {
    int64_t order = distinct[j];
    int64_t count = count_of.count(order) ? count_of.at(order) : 0;
    int64_t cents = total_of.count(order) ? total_of.at(order) : 0;
    upd.push_back({static_cast<int>(j),
                   totals_update_stmt(lit_i(order), lit_d(cents), lit_i(count),
                                      lit_d(cents), lit_ts(last_ts.at(order)))});
    touch.push_back({static_cast<int>(j),
                     touch_update_stmt(lit_i(order), lit_ts(last_ts.at(order)))});
  }

  Statement u3 = merge_updates(upd, extra_keys);
  Statement u4 = merge_updates(touch, extra_keys);
  if (opts.corrupt_drop_else) {
    auto drop_else = [](Statement& s) {
      for (Assignment& a : s.assignments)
        if (a.expr.kind == AssignExpr::Kind::CaseWhen)
          a.expr.else_expr = {AssignExpr::set(Operand::lit(Value::null()))};
    };
    drop_else(u3);
    drop_else(u4);
  }
  ses.run(u3);
  ses.run(u4);

  std::vector<json> out;
  out.reserve(n);
  for (const OrderTotalArgs& a : args) {
    int64_t count = count_of.count(a.order) ? count_of.at(a.order) : 0;
    int64_t cents = total_of.count(a.order) ? total_of.at(a.order) : 0;
    out.push_back(order_total_result_json(a.order, count, cents));
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ schema

Schema shop_schema() {
  using T = Value::Type;
  return Schema({
      TableDef("orders",
               {{"id", T::Integer, true},
                {"item_total", T::Decimal, false},
                {"item_count", T::Integer, false},
                {"total", T::Decimal, false},
                {"updated_at", T::Timestamp, false}}),
      TableDef("line_items",
               {{"id", T::Integer, true},
                {"order_id", T::Integer, false},
                {"quantity", T::Integer, false},
                {"price", T::Decimal, false}}),
  });
}

// -------------------------------------------------------------------- load

void load_shop(Engine& eng, const ShopScale& sc, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> lines(0, sc.max_lines_per_order);
  std::uniform_int_distribution<int64_t> qty(1, 5);
  std::uniform_int_distribution<int64_t> price(100, 5000);

  int64_t li_id = 1;
  for (int o = 1; o <= sc.orders; ++o) {
    eng.load_row("orders",
                 {Value::integer(o), Value::decimal_scaled(0), Value::integer(0),
                  Value::decimal_scaled(0), Value::timestamp(kEpochMs)});
    // Order 2 is pinned to zero line items so the empty-aggregate edge is
    // always present regardless of seed.
    int cnt = o == 2 ? 0 : lines(rng);
    for (int l = 0; l < cnt; ++l)
      eng.load_row("line_items", {Value::integer(li_id++), Value::integer(o),
                                  Value::integer(qty(rng)),
                                  Value::decimal_scaled(price(rng))});
  }
}

std::unique_ptr<Engine> make_shop_engine(const ShopScale& scale, uint64_t seed,
                                         EngineOptions opts) {
  auto eng = std::make_unique<Engine>(shop_schema(), opts);
  load_shop(*eng, scale, seed);
  return eng;
}

// --------------------------------------------------------------- template

TransactionTemplate order_total_template() {
  auto P = [](int slot) { return Operand::param(slot); };
  TransactionTemplate t;
  t.name = "order_total";

  auto add = [&t](Statement s, std::set<std::string> reads,
                  std::set<std::string> writes,
                  std::vector<TemplateStatement::Dataflow> inputs) {
    s.reads = std::move(reads);
    s.writes = std::move(writes);
    TemplateStatement ts;
    ts.stmt = std::move(s);
    ts.inputs = std::move(inputs);
    t.statements.push_back(std::move(ts));
  };

  add(count_sum_stmt(P(0)), {"order_id", "quantity"}, {}, {});
  add(total_sum_stmt(P(0)), {"order_id", "price", "quantity"}, {}, {});
  add(totals_update_stmt(P(0), P(1), P(2), P(3), P(4)), {"id"},
      {"item_total", "item_count", "total", "updated_at"},
      {{1, {"item_count"}}, {2, {"item_total"}}});
  add(touch_update_stmt(P(0), P(1)), {"id"}, {"updated_at"}, {});

  t.promoted_groups = {{3, 4}};
  validate_template(t, shop_schema());
  return t;
}

// ----------------------------------------------------------- arg generation

ShopGen::ShopGen(ShopScale scale, uint64_t seed)
    : scale_(scale), rng_(seed), clock_ms_(kEpochMs + 1'000'000) {}

json ShopGen::order_total_args() {
  std::uniform_int_distribution<int64_t> order(1, scale_.orders);
  return json{{"order_id", order(rng_)}, {"ts", ++clock_ms_}};
}

// ------------------------------------------------------------ service hooks

TemplateExec order_total_exec(OrderTotalOptions opts) {
  TemplateExec ex;
  ex.name = "order_total";
  // The source system has no partitionable dimension, so every invocation
  // shares one merge stream.
  ex.key_of = [](const json&) { return PartitionKey{{Value::integer(0)}}; };
  ex.merged = [opts](ExecSession& ses, const std::vector<json>& batch) {
    return order_total_merged_impl(ses, batch, opts);
  };
  if (opts.intra_only)
    ex.original = [opts](ExecSession& ses, const json& a) {
      return order_total_merged_impl(ses, {a}, opts)[0];
    };
  else
    ex.original = order_total_original;
  return ex;
}

}  // namespace txmerge::workload
