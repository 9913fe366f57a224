#include "txmerge/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "txmerge/rewriter.hpp"

namespace txmerge::workload {

using nlohmann::json;

namespace {

// Fixed epoch for every logical clock so loads and runs are reproducible.
constexpr int64_t kEpochMs = 1'700'000'000'000;

Operand lit_i(int64_t v) { return Operand::lit(Value::integer(v)); }
Operand lit_d(int64_t cents) { return Operand::lit(Value::decimal_scaled(cents)); }
Operand lit_s(std::string s) { return Operand::lit(Value::text(std::move(s))); }
Operand lit_ts(int64_t ms) { return Operand::lit(Value::timestamp(ms)); }

Predicate eqs(std::vector<std::pair<std::string, Operand>> kv) {
  std::vector<Predicate> ps;
  ps.reserve(kv.size());
  for (auto& [c, o] : kv) ps.push_back(Predicate::eq(c, std::move(o)));
  if (ps.size() == 1) return ps[0];
  return Predicate::conj(std::move(ps));
}

Statement select_stmt(std::string table, std::vector<ProjItem> proj,
                      Predicate where, bool for_update = false) {
  Statement s;
  s.kind = StatementKind::Select;
  s.table = std::move(table);
  s.projection = std::move(proj);
  s.predicate = std::move(where);
  s.for_update = for_update;
  return s;
}

Statement update_stmt(std::string table, std::vector<Assignment> assignments,
                      Predicate where) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = std::move(table);
  s.assignments = std::move(assignments);
  s.predicate = std::move(where);
  return s;
}

Statement insert_stmt(std::string table, std::vector<std::string> columns,
                      std::vector<Operand> row) {
  Statement s;
  s.kind = StatementKind::Insert;
  s.table = std::move(table);
  s.insert_columns = std::move(columns);
  s.insert_rows = {std::move(row)};
  return s;
}

Statement with_access(Statement s, std::set<std::string> reads,
                      std::set<std::string> writes = {}) {
  s.reads = std::move(reads);
  s.writes = std::move(writes);
  return s;
}

// ------------------------------------------------------- statement shapes
//
// Each shape is built once from operands so the declarative template (Param
// operands) and the executors (bound literals) cannot drift apart.

Statement customer_info_stmt(Operand w, Operand d, Operand c) {
  return select_stmt("customer",
                     {ProjItem::col("c_discount"), ProjItem::col("c_last"),
                      ProjItem::col("c_credit")},
                     eqs({{"c_w_id", std::move(w)},
                          {"c_d_id", std::move(d)},
                          {"c_id", std::move(c)}}));
}

Statement warehouse_tax_stmt(Operand w) {
  return select_stmt("warehouse", {ProjItem::col("w_tax")},
                     eqs({{"w_id", std::move(w)}}));
}

Statement district_seq_stmt(Operand w, Operand d) {
  return select_stmt("district",
                     {ProjItem::col("d_next_o_id"), ProjItem::col("d_tax")},
                     eqs({{"d_w_id", std::move(w)}, {"d_id", std::move(d)}}),
                     /*for_update=*/true);
}

Statement district_bump_stmt(Operand w, Operand d, Operand by) {
  return update_stmt(
      "district", {{"d_next_o_id", AssignExpr::plus("d_next_o_id", std::move(by))}},
      eqs({{"d_w_id", std::move(w)}, {"d_id", std::move(d)}}));
}

Statement order_insert_stmt(Operand o, Operand w, Operand d, Operand c,
                            Operand entry, Operand cnt, Operand all_local) {
  return insert_stmt(
      "oorder",
      {"o_id", "o_w_id", "o_d_id", "o_c_id", "o_entry_d", "o_ol_cnt",
       "o_all_local"},
      {std::move(o), std::move(w), std::move(d), std::move(c), std::move(entry),
       std::move(cnt), std::move(all_local)});
}

Statement new_order_insert_stmt(Operand o, Operand w, Operand d) {
  return insert_stmt("new_order", {"no_o_id", "no_w_id", "no_d_id"},
                     {std::move(o), std::move(w), std::move(d)});
}

Statement item_info_stmt(Operand i) {
  return select_stmt(
      "item",
      {ProjItem::col("i_price"), ProjItem::col("i_name"), ProjItem::col("i_data")},
      eqs({{"i_id", std::move(i)}}));
}

Statement stock_info_stmt(Operand supply_w, Operand i) {
  return select_stmt("stock",
                     {ProjItem::col("s_quantity"), ProjItem::col("s_data")},
                     eqs({{"s_w_id", std::move(supply_w)}, {"s_i_id", std::move(i)}}),
                     /*for_update=*/true);
}

Statement order_line_insert_stmt(Operand w, Operand d, Operand o, Operand number,
                                 Operand i, Operand supply_w, Operand qty,
                                 Operand amount) {
  return insert_stmt(
      "order_line",
      {"ol_w_id", "ol_d_id", "ol_o_id", "ol_number", "ol_i_id", "ol_supply_w_id",
       "ol_quantity", "ol_amount"},
      {std::move(w), std::move(d), std::move(o), std::move(number), std::move(i),
       std::move(supply_w), std::move(qty), std::move(amount)});
}

Statement stock_update_stmt(Operand supply_w, Operand i, Operand new_q,
                            Operand ytd_by, Operand cnt_by, Operand remote_by) {
  return update_stmt(
      "stock",
      {{"s_quantity", AssignExpr::set(std::move(new_q))},
       {"s_ytd", AssignExpr::plus("s_ytd", std::move(ytd_by))},
       {"s_order_cnt", AssignExpr::plus("s_order_cnt", std::move(cnt_by))},
       {"s_remote_cnt", AssignExpr::plus("s_remote_cnt", std::move(remote_by))}},
      eqs({{"s_w_id", std::move(supply_w)}, {"s_i_id", std::move(i)}}));
}

Statement warehouse_pay_stmt(Operand w, Operand by) {
  return update_stmt("warehouse",
                     {{"w_ytd", AssignExpr::plus("w_ytd", std::move(by))}},
                     eqs({{"w_id", std::move(w)}}));
}

Statement warehouse_info_stmt(Operand w) {
  return select_stmt("warehouse",
                     {ProjItem::col("w_name"), ProjItem::col("w_street_1"),
                      ProjItem::col("w_street_2"), ProjItem::col("w_city"),
                      ProjItem::col("w_state"), ProjItem::col("w_zip")},
                     eqs({{"w_id", std::move(w)}}));
}

Statement district_pay_stmt(Operand w, Operand d, Operand by) {
  return update_stmt("district",
                     {{"d_ytd", AssignExpr::plus("d_ytd", std::move(by))}},
                     eqs({{"d_w_id", std::move(w)}, {"d_id", std::move(d)}}));
}

Statement district_info_stmt(Operand w, Operand d) {
  return select_stmt("district",
                     {ProjItem::col("d_name"), ProjItem::col("d_street_1"),
                      ProjItem::col("d_street_2"), ProjItem::col("d_city"),
                      ProjItem::col("d_state"), ProjItem::col("d_zip")},
                     eqs({{"d_w_id", std::move(w)}, {"d_id", std::move(d)}}));
}

Statement customer_pay_info_stmt(Operand cw, Operand cd, Operand c) {
  return select_stmt("customer",
                     {ProjItem::col("c_credit"), ProjItem::col("c_first"),
                      ProjItem::col("c_last")},
                     eqs({{"c_w_id", std::move(cw)},
                          {"c_d_id", std::move(cd)},
                          {"c_id", std::move(c)}}));
}

Statement customer_data_stmt(Operand cw, Operand cd, Operand c) {
  return select_stmt("customer", {ProjItem::col("c_data")},
                     eqs({{"c_w_id", std::move(cw)},
                          {"c_d_id", std::move(cd)},
                          {"c_id", std::move(c)}}));
}

// Balance moves are expressed as deltas (the caller passes a negative amount
// for the balance column) so concurrent payments against one customer stay
// commutative and the update never has to read the balance first.
Statement customer_pay_update_stmt(Operand cw, Operand cd, Operand c,
                                   Operand balance_by, Operand ytd_by,
                                   Operand cnt_by, std::optional<Operand> data) {
  std::vector<Assignment> assignments = {
      {"c_balance", AssignExpr::plus("c_balance", std::move(balance_by))},
      {"c_ytd_payment", AssignExpr::plus("c_ytd_payment", std::move(ytd_by))},
      {"c_payment_cnt", AssignExpr::plus("c_payment_cnt", std::move(cnt_by))}};
  if (data) assignments.push_back({"c_data", AssignExpr::set(std::move(*data))});
  return update_stmt("customer", std::move(assignments),
                     eqs({{"c_w_id", std::move(cw)},
                          {"c_d_id", std::move(cd)},
                          {"c_id", std::move(c)}}));
}

Statement history_insert_stmt(Operand h_id, Operand c, Operand cd, Operand cw,
                              Operand d, Operand w, Operand date, Operand amount,
                              Operand data) {
  return insert_stmt(
      "history",
      {"h_id", "h_c_id", "h_c_d_id", "h_c_w_id", "h_d_id", "h_w_id", "h_date",
       "h_amount", "h_data"},
      {std::move(h_id), std::move(c), std::move(cd), std::move(cw), std::move(d),
       std::move(w), std::move(date), std::move(amount), std::move(data)});
}

// --------------------------------------------------------------- arguments

struct OrderLineArg {
  int64_t item = 0;
  int64_t supply_w = 0;
  int64_t qty = 0;
};

struct NewOrderArgs {
  int64_t w = 0;
  int64_t d = 0;
  int64_t c = 0;
  int64_t entry_ts = 0;
  std::vector<OrderLineArg> lines;

  static NewOrderArgs parse(const json& a) {
    NewOrderArgs out;
    out.w = a.at("w_id").get<int64_t>();
    out.d = a.at("d_id").get<int64_t>();
    out.c = a.at("c_id").get<int64_t>();
    out.entry_ts = a.at("entry_ts").get<int64_t>();
    for (const json& it : a.at("items"))
      out.lines.push_back({it.at("i_id").get<int64_t>(),
                           it.at("supply_w_id").get<int64_t>(),
                           it.at("qty").get<int64_t>()});
    if (out.lines.empty()) raise(Errc::ValidationError, "order without items");
    return out;
  }

  bool all_local() const {
    for (const OrderLineArg& l : lines)
      if (l.supply_w != w) return false;
    return true;
  }
};

struct PaymentArgs {
  int64_t w = 0;
  int64_t d = 0;
  int64_t c_w = 0;
  int64_t c_d = 0;
  int64_t c = 0;
  int64_t amount_cents = 0;
  int64_t h_id = 0;
  int64_t ts = 0;

  static PaymentArgs parse(const json& a) {
    PaymentArgs out;
    out.w = a.at("w_id").get<int64_t>();
    out.d = a.at("d_id").get<int64_t>();
    out.c_w = a.at("c_w_id").get<int64_t>();
    out.c_d = a.at("c_d_id").get<int64_t>();
    out.c = a.at("c_id").get<int64_t>();
    out.amount_cents = a.at("amount_cents").get<int64_t>();
    out.h_id = a.at("h_id").get<int64_t>();
    out.ts = a.at("ts").get<int64_t>();
    return out;
  }
};

// ------------------------------------------------------- shared arithmetic

// Stock replenishment rule: orders drain quantity; crossing below 10 puts
// 91 units back on the shelf.
int64_t restocked(int64_t quantity, int64_t qty) {
  int64_t next = quantity - qty;
  if (next < 10) next += 91;
  return next;
}

// Discount and taxes are basis points; division truncates toward zero in a
// fixed order so both execution paths produce bit-identical totals.
int64_t discounted_taxed(int64_t cents, int64_t disc_bp, int64_t w_bp,
                         int64_t d_bp) {
  int64_t after_discount = cents * (10000 - disc_bp) / 10000;
  return after_discount * (10000 + w_bp + d_bp) / 10000;
}

// Bad-credit customers log each payment at the head of c_data, truncated to
// the column's 500-character capacity.
std::string chained_data(const PaymentArgs& a, const std::string& old_data) {
  std::string out = std::to_string(a.c) + " " + std::to_string(a.c_d) + " " +
                    std::to_string(a.c_w) + " " + std::to_string(a.d) + " " +
                    std::to_string(a.w) + " " +
                    decimal_to_string(a.amount_cents) + "|" + old_data;
  if (out.size() > 500) out.resize(500);
  return out;
}

// Merged point selects omit a key column whose value every member shares, so
// reading a key back from a merged row needs that shared value as fallback.
Value key_cell(const ResultSet& rs, size_t row, const std::string& column,
               const Value& shared) {
  int idx = rs.column_index(column);
  if (idx < 0) return shared;
  return rs.rows[row][static_cast<size_t>(idx)];
}

// --------------------------------------------------------------- new-order

json neworder_line_json(const OrderLineArg& line, int64_t price_cents,
                        int64_t new_qty) {
  return json{{"i_id", line.item},
              {"price_cents", price_cents},
              {"new_qty", new_qty}};
}

json neworder_result_json(int64_t o_id, int64_t disc_bp, const std::string& last,
                          const std::string& credit, int64_t w_bp, int64_t d_bp,
                          int64_t total_cents, json lines) {
  return json{{"o_id", o_id},          {"c_discount", disc_bp},
              {"c_last", last},        {"c_credit", credit},
              {"w_tax", w_bp},         {"d_tax", d_bp},
              {"total_cents", total_cents}, {"lines", std::move(lines)}};
}

json neworder_original(ExecSession& ses, const json& args) {
  NewOrderArgs a = NewOrderArgs::parse(args);

  ResultSet rc = ses.run(customer_info_stmt(lit_i(a.w), lit_i(a.d), lit_i(a.c)));
  ResultSet rw = ses.run(warehouse_tax_stmt(lit_i(a.w)));
  ResultSet rd = ses.run(district_seq_stmt(lit_i(a.w), lit_i(a.d)));
  int64_t o_id = rd.at(0, "d_next_o_id").as_integer();
  int64_t d_bp = rd.at(0, "d_tax").as_integer();
  ses.run(district_bump_stmt(lit_i(a.w), lit_i(a.d), lit_i(1)));

  int64_t cnt = static_cast<int64_t>(a.lines.size());
  ses.run(order_insert_stmt(lit_i(o_id), lit_i(a.w), lit_i(a.d), lit_i(a.c),
                            lit_ts(a.entry_ts), lit_i(cnt),
                            lit_i(a.all_local() ? 1 : 0)));
  ses.run(new_order_insert_stmt(lit_i(o_id), lit_i(a.w), lit_i(a.d)));

  int64_t sum_cents = 0;
  json lines = json::array();
  for (size_t k = 0; k < a.lines.size(); ++k) {
    const OrderLineArg& line = a.lines[k];
    ResultSet ri = ses.run(item_info_stmt(lit_i(line.item)));
    int64_t price = ri.at(0, "i_price").scaled_decimal();
    ResultSet rs = ses.run(stock_info_stmt(lit_i(line.supply_w), lit_i(line.item)));
    int64_t new_qty = restocked(rs.at(0, "s_quantity").as_integer(), line.qty);

    ses.run(order_line_insert_stmt(lit_i(a.w), lit_i(a.d), lit_i(o_id),
                                   lit_i(static_cast<int64_t>(k) + 1),
                                   lit_i(line.item), lit_i(line.supply_w),
                                   lit_i(line.qty), lit_d(line.qty * price)));
    ses.run(stock_update_stmt(lit_i(line.supply_w), lit_i(line.item),
                              lit_i(new_qty), lit_i(line.qty), lit_i(1),
                              lit_i(line.supply_w != a.w ? 1 : 0)));
    sum_cents += line.qty * price;
    lines.push_back(neworder_line_json(line, price, new_qty));
  }

  int64_t disc_bp = rc.at(0, "c_discount").as_integer();
  int64_t w_bp = rw.at(0, "w_tax").as_integer();
  return neworder_result_json(o_id, disc_bp, rc.at(0, "c_last").as_text(),
                              rc.at(0, "c_credit").as_text(), w_bp, d_bp,
                              discounted_taxed(sum_cents, disc_bp, w_bp, d_bp),
                              std::move(lines));
}

std::vector<json> neworder_merged(ExecSession& ses,
                                  const std::vector<json>& batch) {
  size_t n = batch.size();
  std::vector<NewOrderArgs> args;
  args.reserve(n);
  for (const json& a : batch) args.push_back(NewOrderArgs::parse(a));
  int64_t w = args[0].w, d = args[0].d;

  // Customer rows, one IN select dispatched back per member.
  std::vector<SourceStatement> cust;
  for (size_t k = 0; k < n; ++k)
    cust.push_back({static_cast<int>(k),
                    customer_info_stmt(lit_i(args[k].w), lit_i(args[k].d),
                                       lit_i(args[k].c))});
  MergedSelect mc = merge_selects(cust);
  std::map<int, ResultSet> per_cust = dispatch_results(ses.run(mc), mc);

  // Shared reads collapse to one statement each.
  std::vector<SourceStatement> wtax, dseq;
  for (size_t k = 0; k < n; ++k) {
    wtax.push_back({static_cast<int>(k), warehouse_tax_stmt(lit_i(w))});
    dseq.push_back({static_cast<int>(k), district_seq_stmt(lit_i(w), lit_i(d))});
  }
  ResultSet rw = ses.run(*dedupe_reads(wtax));
  ResultSet rd = ses.run(*dedupe_reads(dseq));
  int64_t w_bp = rw.at(0, "w_tax").as_integer();
  int64_t d_bp = rd.at(0, "d_tax").as_integer();

  // One sequence read hands out n consecutive order ids; the increments
  // aggregate into a single +n.
  SequenceAllocation seq =
      allocate_sequence(rd.at(0, "d_next_o_id").as_integer(),
                        static_cast<int>(n));
  std::vector<SourceStatement> bumps;
  for (size_t k = 0; k < n; ++k)
    bumps.push_back(
        {static_cast<int>(k), district_bump_stmt(lit_i(w), lit_i(d), lit_i(1))});
  ses.run(aggregate_delta_updates(bumps));
  for (size_t k = 0; k < n; ++k)
    ses.echo(static_cast<int>(k), json{{"o_id", seq.values[k]}});

  // Order headers and queue entries become multi-row inserts.
  std::vector<SourceStatement> headers, queued;
  for (size_t k = 0; k < n; ++k) {
    headers.push_back(
        {static_cast<int>(k),
         order_insert_stmt(lit_i(seq.values[k]), lit_i(w), lit_i(d),
                           lit_i(args[k].c), lit_ts(args[k].entry_ts),
                           lit_i(static_cast<int64_t>(args[k].lines.size())),
                           lit_i(args[k].all_local() ? 1 : 0))});
    queued.push_back({static_cast<int>(k),
                      new_order_insert_stmt(lit_i(seq.values[k]), lit_i(w),
                                            lit_i(d))});
  }
  ses.run(merge_inserts(headers));
  ses.run(merge_inserts(queued));

  // Distinct items and distinct stock rows, in first-touch order.
  std::vector<int64_t> item_order;
  std::vector<std::pair<int64_t, int64_t>> stock_order;
  for (const NewOrderArgs& a : args)
    for (const OrderLineArg& l : a.lines) {
      if (std::find(item_order.begin(), item_order.end(), l.item) ==
          item_order.end())
        item_order.push_back(l.item);
      std::pair<int64_t, int64_t> sk{l.supply_w, l.item};
      if (std::find(stock_order.begin(), stock_order.end(), sk) ==
          stock_order.end())
        stock_order.push_back(sk);
    }

  std::vector<SourceStatement> item_sel;
  for (size_t j = 0; j < item_order.size(); ++j)
    item_sel.push_back({0, item_info_stmt(lit_i(item_order[j]))});
  MergedSelect mi = merge_selects(item_sel);
  ResultSet ri = ses.run(mi);
  std::map<int64_t, int64_t> price_of;
  for (size_t r = 0; r < ri.rows.size(); ++r) {
    int64_t item =
        key_cell(ri, r, "i_id", Value::integer(item_order[0])).as_integer();
    price_of[item] = ri.at(r, "i_price").scaled_decimal();
  }

  std::vector<SourceStatement> stock_sel;
  for (size_t j = 0; j < stock_order.size(); ++j)
    stock_sel.push_back(
        {0, stock_info_stmt(lit_i(stock_order[j].first),
                            lit_i(stock_order[j].second))});
  MergedSelect msk = merge_selects(stock_sel);
  ResultSet rsk = ses.run(msk);
  std::map<std::pair<int64_t, int64_t>, int64_t> qty_of;
  for (size_t r = 0; r < rsk.rows.size(); ++r) {
    int64_t sw =
        key_cell(rsk, r, "s_w_id", Value::integer(stock_order[0].first))
            .as_integer();
    int64_t si =
        key_cell(rsk, r, "s_i_id", Value::integer(stock_order[0].second))
            .as_integer();
    qty_of[{sw, si}] = rsk.at(r, "s_quantity").as_integer();
  }

  // Walk the order lines in batch order: chain per-row stock quantities the
  // way serial execution would observe them and collect per-row aggregates.
  struct StockAgg {
    int64_t final_qty = 0;
    int64_t qty_sum = 0;
    int64_t orders = 0;
    int64_t remote = 0;
  };
  std::map<std::pair<int64_t, int64_t>, StockAgg> stock_agg;
  for (auto& sk : stock_order) stock_agg[sk].final_qty = qty_of.at(sk);

  std::vector<SourceStatement> line_rows;
  std::vector<json> line_payloads(n, json::array());
  std::vector<int64_t> sums(n, 0);
  for (size_t k = 0; k < n; ++k)
    for (size_t j = 0; j < args[k].lines.size(); ++j) {
      const OrderLineArg& line = args[k].lines[j];
      int64_t price = price_of.at(line.item);
      StockAgg& agg = stock_agg.at({line.supply_w, line.item});
      int64_t new_qty = restocked(agg.final_qty, line.qty);
      agg.final_qty = new_qty;
      agg.qty_sum += line.qty;
      agg.orders += 1;
      agg.remote += line.supply_w != args[k].w ? 1 : 0;

      line_rows.push_back(
          {static_cast<int>(k),
           order_line_insert_stmt(lit_i(w), lit_i(d), lit_i(seq.values[k]),
                                  lit_i(static_cast<int64_t>(j) + 1),
                                  lit_i(line.item), lit_i(line.supply_w),
                                  lit_i(line.qty), lit_d(line.qty * price))});
      sums[k] += line.qty * price;
      line_payloads[k].push_back(neworder_line_json(line, price, new_qty));
    }
  ses.run(merge_inserts(line_rows));

  std::vector<SourceStatement> stock_upd;
  for (size_t j = 0; j < stock_order.size(); ++j) {
    const StockAgg& agg = stock_agg.at(stock_order[j]);
    stock_upd.push_back(
        {static_cast<int>(j),
         stock_update_stmt(lit_i(stock_order[j].first),
                           lit_i(stock_order[j].second), lit_i(agg.final_qty),
                           lit_i(agg.qty_sum), lit_i(agg.orders),
                           lit_i(agg.remote))});
  }
  ses.run(merge_updates(stock_upd));

  std::vector<json> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    const ResultSet& rc = per_cust.at(static_cast<int>(k));
    int64_t disc_bp = rc.at(0, "c_discount").as_integer();
    out.push_back(neworder_result_json(
        seq.values[k], disc_bp, rc.at(0, "c_last").as_text(),
        rc.at(0, "c_credit").as_text(), w_bp, d_bp,
        discounted_taxed(sums[k], disc_bp, w_bp, d_bp),
        std::move(line_payloads[k])));
  }
  return out;
}

// ----------------------------------------------------------------- payment

json payment_result_json(const ResultSet& rw, const ResultSet& rd,
                         const ResultSet& rc, const json& c_data) {
  return json{{"w_name", rw.at(0, "w_name").as_text()},
              {"w_city", rw.at(0, "w_city").as_text()},
              {"d_name", rd.at(0, "d_name").as_text()},
              {"d_city", rd.at(0, "d_city").as_text()},
              {"c_credit", rc.at(0, "c_credit").as_text()},
              {"c_first", rc.at(0, "c_first").as_text()},
              {"c_last", rc.at(0, "c_last").as_text()},
              {"c_data", c_data}};
}

Statement history_row(const PaymentArgs& a, const std::string& w_name,
                      const std::string& d_name) {
  return history_insert_stmt(lit_i(a.h_id), lit_i(a.c), lit_i(a.c_d),
                             lit_i(a.c_w), lit_i(a.d), lit_i(a.w), lit_ts(a.ts),
                             lit_d(a.amount_cents),
                             lit_s(w_name + "    " + d_name));
}

json payment_original(ExecSession& ses, const json& args) {
  PaymentArgs a = PaymentArgs::parse(args);

  ses.run(warehouse_pay_stmt(lit_i(a.w), lit_d(a.amount_cents)));
  ResultSet rw = ses.run(warehouse_info_stmt(lit_i(a.w)));
  ses.run(district_pay_stmt(lit_i(a.w), lit_i(a.d), lit_d(a.amount_cents)));
  ResultSet rd = ses.run(district_info_stmt(lit_i(a.w), lit_i(a.d)));
  ResultSet rc =
      ses.run(customer_pay_info_stmt(lit_i(a.c_w), lit_i(a.c_d), lit_i(a.c)));

  json c_data;
  if (rc.at(0, "c_credit").as_text() == "BC") {
    ResultSet rdata =
        ses.run(customer_data_stmt(lit_i(a.c_w), lit_i(a.c_d), lit_i(a.c)));
    std::string next = chained_data(a, rdata.at(0, "c_data").as_text());
    ses.run(customer_pay_update_stmt(lit_i(a.c_w), lit_i(a.c_d), lit_i(a.c),
                                     lit_d(-a.amount_cents), lit_d(a.amount_cents),
                                     lit_i(1), lit_s(next)));
    c_data = next;
  } else {
    ses.run(customer_pay_update_stmt(lit_i(a.c_w), lit_i(a.c_d), lit_i(a.c),
                                     lit_d(-a.amount_cents), lit_d(a.amount_cents),
                                     lit_i(1), std::nullopt));
  }
  ses.run(history_row(a, rw.at(0, "w_name").as_text(),
                      rd.at(0, "d_name").as_text()));
  return payment_result_json(rw, rd, rc, c_data);
}

std::vector<json> payment_merged(ExecSession& ses,
                                 const std::vector<json>& batch) {
  size_t n = batch.size();
  std::vector<PaymentArgs> args;
  args.reserve(n);
  for (const json& a : batch) args.push_back(PaymentArgs::parse(a));
  int64_t w = args[0].w, d = args[0].d;

  // The warehouse and district rows every member touches are one aggregated
  // delta and one shared read each.
  int64_t total_cents = 0;
  for (const PaymentArgs& a : args) total_cents += a.amount_cents;

  std::vector<SourceStatement> wpay, dpay, winfo, dinfo;
  for (size_t k = 0; k < n; ++k) {
    int inv = static_cast<int>(k);
    wpay.push_back({inv, warehouse_pay_stmt(lit_i(w), lit_d(args[k].amount_cents))});
    winfo.push_back({inv, warehouse_info_stmt(lit_i(w))});
    dpay.push_back(
        {inv, district_pay_stmt(lit_i(w), lit_i(d), lit_d(args[k].amount_cents))});
    dinfo.push_back({inv, district_info_stmt(lit_i(w), lit_i(d))});
  }
  ses.run(aggregate_delta_updates(wpay));
  ResultSet rw = ses.run(*dedupe_reads(winfo));
  ses.run(aggregate_delta_updates(dpay));
  ResultSet rd = ses.run(*dedupe_reads(dinfo));
  std::string w_name = rw.at(0, "w_name").as_text();
  std::string d_name = rd.at(0, "d_name").as_text();

  std::vector<SourceStatement> cinfo;
  for (size_t k = 0; k < n; ++k)
    cinfo.push_back({static_cast<int>(k),
                     customer_pay_info_stmt(lit_i(args[k].c_w), lit_i(args[k].c_d),
                                            lit_i(args[k].c))});
  MergedSelect mc = merge_selects(cinfo);
  std::map<int, ResultSet> per_cust = dispatch_results(ses.run(mc), mc);

  // Split members by credit standing; duplicates of one customer aggregate
  // into a single update so the merged CASE arms stay collision-free.
  using CustKey = KeyTuple;
  struct CustAgg {
    int64_t amount_sum = 0;
    int64_t count = 0;
    std::string data;  // bad-credit running chain
  };
  std::vector<CustKey> bc_order, gc_order;
  std::map<CustKey, CustAgg> agg;
  std::vector<bool> is_bc(n, false);

  for (size_t k = 0; k < n; ++k)
    is_bc[k] = per_cust.at(static_cast<int>(k)).at(0, "c_credit").as_text() ==
               "BC";

  std::vector<CustKey> bc_distinct;
  for (size_t k = 0; k < n; ++k) {
    if (!is_bc[k]) continue;
    CustKey key{Value::integer(args[k].c_w), Value::integer(args[k].c_d),
                Value::integer(args[k].c)};
    if (std::find(bc_distinct.begin(), bc_distinct.end(), key) ==
        bc_distinct.end())
      bc_distinct.push_back(key);
  }

  std::map<CustKey, std::string> old_data;
  if (!bc_distinct.empty()) {
    std::vector<SourceStatement> cdata;
    for (size_t j = 0; j < bc_distinct.size(); ++j)
      cdata.push_back({0, customer_data_stmt(Operand::lit(bc_distinct[j][0]),
                                             Operand::lit(bc_distinct[j][1]),
                                             Operand::lit(bc_distinct[j][2]))});
    MergedSelect md = merge_selects(cdata);
    ResultSet rdata = ses.run(md);
    for (size_t r = 0; r < rdata.rows.size(); ++r) {
      CustKey key{key_cell(rdata, r, "c_w_id", bc_distinct[0][0]),
                  key_cell(rdata, r, "c_d_id", bc_distinct[0][1]),
                  key_cell(rdata, r, "c_id", bc_distinct[0][2])};
      old_data[key] = rdata.at(r, "c_data").as_text();
    }
  }

  std::vector<json> member_data(n);
  for (size_t k = 0; k < n; ++k) {
    CustKey key{Value::integer(args[k].c_w), Value::integer(args[k].c_d),
                Value::integer(args[k].c)};
    auto [it, fresh] = agg.try_emplace(key);
    CustAgg& ca = it->second;
    if (fresh) {
      if (is_bc[k]) {
        ca.data = old_data.at(key);
        bc_order.push_back(key);
      } else {
        gc_order.push_back(key);
      }
    }
    ca.amount_sum += args[k].amount_cents;
    ca.count += 1;
    if (is_bc[k]) {
      ca.data = chained_data(args[k], ca.data);
      member_data[k] = ca.data;
    }
  }

  auto cust_update = [&](const CustKey& key, bool bad_credit) {
    const CustAgg& ca = agg.at(key);
    return customer_pay_update_stmt(
        Operand::lit(key[0]), Operand::lit(key[1]), Operand::lit(key[2]),
        lit_d(-ca.amount_sum), lit_d(ca.amount_sum), lit_i(ca.count),
        bad_credit ? std::optional<Operand>(lit_s(ca.data)) : std::nullopt);
  };

  if (!bc_order.empty()) {
    std::vector<SourceStatement> upd;
    for (size_t j = 0; j < bc_order.size(); ++j)
      upd.push_back({static_cast<int>(j), cust_update(bc_order[j], true)});
    ses.run(merge_updates(upd));
  }
  if (!gc_order.empty()) {
    std::vector<SourceStatement> upd;
    for (size_t j = 0; j < gc_order.size(); ++j)
      upd.push_back({static_cast<int>(j), cust_update(gc_order[j], false)});
    ses.run(merge_updates(upd));
  }

  std::vector<SourceStatement> hist;
  for (size_t k = 0; k < n; ++k)
    hist.push_back({static_cast<int>(k), history_row(args[k], w_name, d_name)});
  ses.run(merge_inserts(hist));

  std::vector<json> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k)
    out.push_back(payment_result_json(rw, rd, per_cust.at(static_cast<int>(k)),
                                      member_data[k]));
  return out;
}

}  // namespace

// ------------------------------------------------------------------ schema

Schema tpcc_schema() {
  using T = Value::Type;
  // Tax and discount columns hold basis points (1/100 of a percent) so the
  // money math stays in exact integer arithmetic end to end.
  return Schema({
      TableDef("warehouse",
               {{"w_id", T::Integer, true},
                {"w_name", T::Text, false},
                {"w_street_1", T::Text, false},
                {"w_street_2", T::Text, false},
                {"w_city", T::Text, false},
                {"w_state", T::Text, false},
                {"w_zip", T::Text, false},
                {"w_tax", T::Integer, false},
                {"w_ytd", T::Decimal, false}}),
      TableDef("district",
               {{"d_w_id", T::Integer, true},
                {"d_id", T::Integer, true},
                {"d_name", T::Text, false},
                {"d_street_1", T::Text, false},
                {"d_street_2", T::Text, false},
                {"d_city", T::Text, false},
                {"d_state", T::Text, false},
                {"d_zip", T::Text, false},
                {"d_tax", T::Integer, false},
                {"d_ytd", T::Decimal, false},
                {"d_next_o_id", T::Integer, false}}),
      TableDef("customer",
               {{"c_w_id", T::Integer, true},
                {"c_d_id", T::Integer, true},
                {"c_id", T::Integer, true},
                {"c_first", T::Text, false},
                {"c_middle", T::Text, false},
                {"c_last", T::Text, false},
                {"c_credit", T::Text, false},
                {"c_credit_lim", T::Decimal, false},
                {"c_discount", T::Integer, false},
                {"c_balance", T::Decimal, false},
                {"c_ytd_payment", T::Decimal, false},
                {"c_payment_cnt", T::Integer, false},
                {"c_delivery_cnt", T::Integer, false},
                {"c_data", T::Text, false}}),
      TableDef("history",
               {{"h_id", T::Integer, true},
                {"h_c_id", T::Integer, false},
                {"h_c_d_id", T::Integer, false},
                {"h_c_w_id", T::Integer, false},
                {"h_d_id", T::Integer, false},
                {"h_w_id", T::Integer, false},
                {"h_date", T::Timestamp, false},
                {"h_amount", T::Decimal, false},
                {"h_data", T::Text, false}}),
      TableDef("item",
               {{"i_id", T::Integer, true},
                {"i_name", T::Text, false},
                {"i_price", T::Decimal, false},
                {"i_data", T::Text, false}}),
      TableDef("stock",
               {{"s_w_id", T::Integer, true},
                {"s_i_id", T::Integer, true},
                {"s_quantity", T::Integer, false},
                {"s_ytd", T::Integer, false},
                {"s_order_cnt", T::Integer, false},
                {"s_remote_cnt", T::Integer, false},
                {"s_data", T::Text, false}}),
      TableDef("oorder",
               {{"o_id", T::Integer, true},
                {"o_w_id", T::Integer, true},
                {"o_d_id", T::Integer, true},
                {"o_c_id", T::Integer, false},
                {"o_entry_d", T::Timestamp, false},
                {"o_ol_cnt", T::Integer, false},
                {"o_all_local", T::Integer, false}}),
      TableDef("new_order",
               {{"no_o_id", T::Integer, true},
                {"no_w_id", T::Integer, true},
                {"no_d_id", T::Integer, true}}),
      TableDef("order_line",
               {{"ol_w_id", T::Integer, true},
                {"ol_d_id", T::Integer, true},
                {"ol_o_id", T::Integer, true},
                {"ol_number", T::Integer, true},
                {"ol_i_id", T::Integer, false},
                {"ol_supply_w_id", T::Integer, false},
                {"ol_quantity", T::Integer, false},
                {"ol_amount", T::Decimal, false}}),
  });
}

// -------------------------------------------------------------------- load

namespace {

const char* kNameSyllables[10] = {"BAR",  "OUGHT", "ABLE", "PRI",   "PRES",
                                  "ESE",  "ANTI",  "CALLY", "ATION", "EING"};

std::string synthetic_last_name(int64_t seed) {
  return std::string(kNameSyllables[(seed / 100) % 10]) +
         kNameSyllables[(seed / 10) % 10] + kNameSyllables[seed % 10];
}

}  // namespace

void load_tpcc(Engine& eng, const TpccScale& sc, uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
  };
  std::bernoulli_distribution bad_credit(sc.bc_fraction);

  std::vector<int64_t> price_cents(static_cast<size_t>(sc.items) + 1, 0);
  for (int i = 1; i <= sc.items; ++i) {
    price_cents[static_cast<size_t>(i)] = uniform(100, 10000);
    eng.load_row("item",
                 {Value::integer(i), Value::text("item-" + std::to_string(i)),
                  Value::decimal_scaled(price_cents[static_cast<size_t>(i)]),
                  Value::text("idata-" + std::to_string(i))});
  }

  int64_t next_h_id = 1;
  for (int w = 1; w <= sc.warehouses; ++w) {
    std::string ws = std::to_string(w);
    eng.load_row("warehouse",
                 {Value::integer(w), Value::text("WARE" + ws),
                  Value::text("w" + ws + " main st"), Value::text("suite 1"),
                  Value::text("city-" + ws), Value::text("ST"),
                  Value::text("90000" + ws), Value::integer(uniform(0, 2000)),
                  Value::decimal_scaled(30'000'000)});

    for (int i = 1; i <= sc.items; ++i)
      eng.load_row("stock", {Value::integer(w), Value::integer(i),
                             Value::integer(uniform(10, 100)), Value::integer(0),
                             Value::integer(0), Value::integer(0),
                             Value::text("sdata-" + ws + "-" + std::to_string(i))});

    for (int d = 1; d <= sc.districts_per_warehouse; ++d) {
      std::string ds = std::to_string(d);
      eng.load_row("district",
                   {Value::integer(w), Value::integer(d),
                    Value::text("DIST" + ds), Value::text("d" + ds + " king rd"),
                    Value::text("floor 2"), Value::text("city-" + ws),
                    Value::text("ST"), Value::text("80000" + ds),
                    Value::integer(uniform(0, 2000)),
                    Value::decimal_scaled(3'000'000),
                    Value::integer(sc.initial_orders_per_district + 1)});

      for (int c = 1; c <= sc.customers_per_district; ++c) {
        bool bc = bad_credit(rng);
        std::string cs = std::to_string(c);
        std::string data = "cdata-" + ws + "-" + ds + "-" + cs;
        data += std::string(64 - std::min<size_t>(64, data.size()), 'x');
        eng.load_row(
            "customer",
            {Value::integer(w), Value::integer(d), Value::integer(c),
             Value::text("first-" + cs), Value::text("OE"),
             Value::text(synthetic_last_name(c - 1)),
             Value::text(bc ? "BC" : "GC"), Value::decimal_scaled(5'000'000),
             Value::integer(uniform(0, 5000)), Value::decimal_scaled(-1000),
             Value::decimal_scaled(1000), Value::integer(1), Value::integer(0),
             Value::text(data)});
        eng.load_row("history",
                     {Value::integer(next_h_id++), Value::integer(c),
                      Value::integer(d), Value::integer(w), Value::integer(d),
                      Value::integer(w), Value::timestamp(kEpochMs),
                      Value::decimal_scaled(1000),
                      Value::text("WARE" + ws + "    DIST" + ds)});
      }

      // Initial orders cover every customer once, in shuffled order; the
      // newest third still waits in the delivery queue.
      std::vector<int64_t> cust_perm;
      for (int c = 1; c <= sc.customers_per_district; ++c) cust_perm.push_back(c);
      std::shuffle(cust_perm.begin(), cust_perm.end(), rng);
      for (int o = 1; o <= sc.initial_orders_per_district; ++o) {
        int64_t c = cust_perm[static_cast<size_t>((o - 1) %
                                                  sc.customers_per_district)];
        int64_t cnt = uniform(sc.min_order_lines, sc.max_order_lines);
        eng.load_row("oorder",
                     {Value::integer(o), Value::integer(w), Value::integer(d),
                      Value::integer(c), Value::timestamp(kEpochMs + o),
                      Value::integer(cnt), Value::integer(1)});
        if (3 * o > 2 * sc.initial_orders_per_district)
          eng.load_row("new_order", {Value::integer(o), Value::integer(w),
                                     Value::integer(d)});
        for (int64_t l = 1; l <= cnt; ++l) {
          int64_t item = uniform(1, sc.items);
          int64_t qty = uniform(1, 10);
          eng.load_row(
              "order_line",
              {Value::integer(w), Value::integer(d), Value::integer(o),
               Value::integer(l), Value::integer(item), Value::integer(w),
               Value::integer(qty),
               Value::decimal_scaled(qty *
                                     price_cents[static_cast<size_t>(item)])});
        }
      }
    }
  }
}

std::unique_ptr<Engine> make_tpcc_engine(const TpccScale& scale, uint64_t seed,
                                         EngineOptions opts) {
  auto eng = std::make_unique<Engine>(tpcc_schema(), opts);
  load_tpcc(*eng, scale, seed);
  return eng;
}

// --------------------------------------------------------------- templates

TransactionTemplate neworder_template() {
  auto P = [](int slot) { return Operand::param(slot); };
  TransactionTemplate t;
  t.name = "neworder";
  t.partition_key = {"w_id", "d_id"};

  auto add = [&t](Statement s, std::set<std::string> reads,
                  std::set<std::string> writes, bool per_loop,
                  std::vector<TemplateStatement::Dataflow> inputs) {
    TemplateStatement ts;
    ts.stmt = with_access(std::move(s), std::move(reads), std::move(writes));
    ts.per_loop_item = per_loop;
    ts.inputs = std::move(inputs);
    t.statements.push_back(std::move(ts));
  };

  add(customer_info_stmt(P(0), P(1), P(2)),
      {"c_w_id", "c_d_id", "c_id", "c_discount", "c_last", "c_credit"}, {},
      false, {});
  add(warehouse_tax_stmt(P(0)), {"w_id", "w_tax"}, {}, false, {});
  add(district_seq_stmt(P(0), P(1)),
      {"d_w_id", "d_id", "d_next_o_id", "d_tax"}, {}, false, {});
  add(district_bump_stmt(P(0), P(1), lit_i(1)),
      {"d_w_id", "d_id", "d_next_o_id"}, {"d_next_o_id"}, false, {});
  add(order_insert_stmt(P(0), P(1), P(2), P(3), P(4), P(5), P(6)), {}, {},
      false, {{3, {"d_next_o_id"}}});
  add(new_order_insert_stmt(P(0), P(1), P(2)), {}, {}, false,
      {{3, {"d_next_o_id"}}});
  add(item_info_stmt(P(0)), {"i_id", "i_price", "i_name", "i_data"}, {}, true,
      {});
  add(stock_info_stmt(P(0), P(1)), {"s_w_id", "s_i_id", "s_quantity", "s_data"},
      {}, true, {});
  add(order_line_insert_stmt(P(0), P(1), P(2), P(3), P(4), P(5), P(6), P(7)),
      {}, {}, true, {{3, {"d_next_o_id"}}, {7, {"i_price"}}});
  add(stock_update_stmt(P(0), P(1), P(2), P(3), lit_i(1), P(4)),
      {"s_w_id", "s_i_id", "s_ytd", "s_order_cnt", "s_remote_cnt"},
      {"s_quantity", "s_ytd", "s_order_cnt", "s_remote_cnt"}, true,
      {{8, {"s_quantity"}}});

  t.promoted_groups = {{3, 4}, {8, 10}};
  validate_template(t, tpcc_schema());
  return t;
}

TransactionTemplate payment_template() {
  auto P = [](int slot) { return Operand::param(slot); };
  TransactionTemplate t;
  t.name = "payment";
  t.partition_key = {"w_id", "d_id"};

  auto add = [&t](Statement s, std::set<std::string> reads,
                  std::set<std::string> writes,
                  std::vector<TemplateStatement::Dataflow> inputs) {
    TemplateStatement ts;
    ts.stmt = with_access(std::move(s), std::move(reads), std::move(writes));
    ts.inputs = std::move(inputs);
    t.statements.push_back(std::move(ts));
  };

  add(warehouse_pay_stmt(P(0), P(1)), {"w_id", "w_ytd"}, {"w_ytd"}, {});
  add(warehouse_info_stmt(P(0)),
      {"w_id", "w_name", "w_street_1", "w_street_2", "w_city", "w_state",
       "w_zip"},
      {}, {});
  add(district_pay_stmt(P(0), P(1), P(2)), {"d_w_id", "d_id", "d_ytd"},
      {"d_ytd"}, {});
  add(district_info_stmt(P(0), P(1)),
      {"d_w_id", "d_id", "d_name", "d_street_1", "d_street_2", "d_city",
       "d_state", "d_zip"},
      {}, {});
  add(customer_pay_info_stmt(P(0), P(1), P(2)),
      {"c_w_id", "c_d_id", "c_id", "c_credit", "c_first", "c_last"}, {}, {});
  add(customer_data_stmt(P(0), P(1), P(2)),
      {"c_w_id", "c_d_id", "c_id", "c_data"}, {}, {});
  add(customer_pay_update_stmt(P(0), P(1), P(2), P(3), P(4), lit_i(1), P(5)),
      {"c_w_id", "c_d_id", "c_id", "c_balance", "c_ytd_payment",
       "c_payment_cnt"},
      {"c_balance", "c_ytd_payment", "c_payment_cnt", "c_data"},
      {{6, {"c_data"}}});
  add(customer_pay_update_stmt(P(0), P(1), P(2), P(3), P(4), lit_i(1),
                               std::nullopt),
      {"c_w_id", "c_d_id", "c_id", "c_balance", "c_ytd_payment",
       "c_payment_cnt"},
      {"c_balance", "c_ytd_payment", "c_payment_cnt"}, {});
  add(history_insert_stmt(P(0), P(1), P(2), P(3), P(4), P(5), P(6), P(7), P(8)),
      {}, {}, {{2, {"w_name"}}, {4, {"d_name"}}});

  t.promoted_groups = {{6, 8}};
  validate_template(t, tpcc_schema());
  return t;
}

// ----------------------------------------------------------- arg generation

ZipfSampler::ZipfSampler(int n, double theta) {
  cdf_.reserve(static_cast<size_t>(n));
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    sum += 1.0 / std::pow(static_cast<double>(k), theta);
    cdf_.push_back(sum);
  }
  for (double& c : cdf_) c /= sum;
}

int ZipfSampler::sample(std::mt19937_64& rng) const {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<int>(it - cdf_.begin()) + 1;
}

TpccGen::TpccGen(TpccScale scale, uint64_t seed, int64_t id_base)
    : scale_(scale),
      rng_(seed),
      item_zipf_(scale.items, 0.99),
      next_h_id_(10'000'000 + id_base),
      clock_ms_(kEpochMs + 1'000'000) {}

json TpccGen::neworder_args() {
  int w = static_cast<int>(
      std::uniform_int_distribution<>(1, scale_.warehouses)(rng_));
  int d = static_cast<int>(
      std::uniform_int_distribution<>(1, scale_.districts_per_warehouse)(rng_));
  return neworder_args_for(w, d);
}

json TpccGen::neworder_args_for(int w_id, int d_id) {
  std::uniform_int_distribution<> cust(1, scale_.customers_per_district);
  std::uniform_int_distribution<> lines(scale_.min_order_lines,
                                        scale_.max_order_lines);
  std::uniform_int_distribution<> qty(1, 10);
  std::bernoulli_distribution remote(0.01);

  int cnt = lines(rng_);
  json items = json::array();
  std::set<int> seen;
  for (int k = 0; k < cnt; ++k) {
    int item = item_zipf_.sample(rng_);
    while (seen.count(item)) item = item_zipf_.sample(rng_);
    seen.insert(item);

    int supply = w_id;
    if (scale_.warehouses > 1 && remote(rng_)) {
      std::uniform_int_distribution<> other(1, scale_.warehouses - 1);
      int pick = other(rng_);
      supply = pick >= w_id ? pick + 1 : pick;
    }
    items.push_back(
        json{{"i_id", item}, {"supply_w_id", supply}, {"qty", qty(rng_)}});
  }
  return json{{"w_id", w_id},
              {"d_id", d_id},
              {"c_id", cust(rng_)},
              {"entry_ts", ++clock_ms_},
              {"items", std::move(items)}};
}

json TpccGen::payment_args() {
  int w = static_cast<int>(
      std::uniform_int_distribution<>(1, scale_.warehouses)(rng_));
  int d = static_cast<int>(
      std::uniform_int_distribution<>(1, scale_.districts_per_warehouse)(rng_));
  return payment_args_for(w, d);
}

json TpccGen::payment_args_for(int w_id, int d_id) {
  std::uniform_int_distribution<> cust(1, scale_.customers_per_district);
  std::uniform_int_distribution<> dist(1, scale_.districts_per_warehouse);
  std::uniform_int_distribution<int64_t> amount(100, 500'000);
  std::bernoulli_distribution remote(scale_.remote_payment_fraction);

  int c_w = w_id, c_d = d_id;
  if (scale_.warehouses > 1 && remote(rng_)) {
    std::uniform_int_distribution<> other(1, scale_.warehouses - 1);
    int pick = other(rng_);
    c_w = pick >= w_id ? pick + 1 : pick;
    c_d = dist(rng_);
  }
  return json{{"w_id", w_id},
              {"d_id", d_id},
              {"c_w_id", c_w},
              {"c_d_id", c_d},
              {"c_id", cust(rng_)},
              {"amount_cents", amount(rng_)},
              {"h_id", next_h_id_++},
              {"ts", ++clock_ms_}};
}

// ------------------------------------------------------------ service hooks

TemplateExec neworder_exec(bool intra_only) {
  TemplateExec ex;
  ex.name = "neworder";
  ex.key_of = [](const json& a) {
    return PartitionKey{{Value::integer(a.at("w_id").get<int64_t>()),
                         Value::integer(a.at("d_id").get<int64_t>())}};
  };
  ex.merged = neworder_merged;
  if (intra_only)
    ex.original = [](ExecSession& ses, const json& a) {
      return neworder_merged(ses, {a})[0];
    };
  else
    ex.original = neworder_original;
  return ex;
}

TemplateExec payment_exec(bool intra_only) {
  TemplateExec ex;
  ex.name = "payment";
  ex.key_of = [](const json& a) {
    return PartitionKey{{Value::integer(a.at("w_id").get<int64_t>()),
                         Value::integer(a.at("d_id").get<int64_t>())}};
  };
  ex.merged = payment_merged;
  if (intra_only)
    ex.original = [](ExecSession& ses, const json& a) {
      return payment_merged(ses, {a})[0];
    };
  else
    ex.original = payment_original;
  return ex;
}

}  // namespace txmerge::workload
