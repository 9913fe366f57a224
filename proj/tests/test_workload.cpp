#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "txmerge/exec.hpp"
#include "txmerge/harness.hpp"
#include "txmerge/rewriter.hpp"
#include "txmerge/workload.hpp"

using namespace txmerge;
using namespace txmerge::workload;
using nlohmann::json;

namespace {

std::vector<json> run_serial(Engine& eng, const TemplateExec& exec,
                             const std::vector<json>& batch) {
  std::vector<json> out;
  for (const json& a : batch) {
    auto txn = eng.begin();
    ExecSession ses(eng, txn);
    out.push_back(exec.original(ses, a));
    eng.commit(txn);
  }
  return out;
}

std::vector<json> run_merged(Engine& eng, const TemplateExec& exec,
                             const std::vector<json>& batch,
                             MergedPlan* plan_out = nullptr) {
  auto txn = eng.begin();
  ExecSession ses(eng, txn, plan_out != nullptr);
  std::vector<json> out = exec.merged(ses, batch);
  eng.commit(txn);
  if (plan_out) *plan_out = ses.plan();
  return out;
}

// Runs the same batch serially on a clone and merged on the original and
// requires identical per-member results and an identical final state.
void check_equivalent(Engine& eng, const TemplateExec& exec,
                      const std::vector<json>& batch,
                      MergedPlan* plan_out = nullptr) {
  std::unique_ptr<Engine> reference = eng.clone();
  std::vector<json> expect = run_serial(*reference, exec, batch);
  std::vector<json> got = run_merged(eng, exec, batch, plan_out);
  REQUIRE(got.size() == expect.size());
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expect[i]);
  CHECK(eng.snapshot().digest == reference->snapshot().digest);
}

json payment_args_json(int64_t w, int64_t d, int64_t c, int64_t cents,
                       int64_t h_id) {
  return json{{"w_id", w},          {"d_id", d},   {"c_w_id", w},
              {"c_d_id", d},        {"c_id", c},   {"amount_cents", cents},
              {"h_id", h_id},       {"ts", 1'700'000'500'000 + h_id}};
}

}  // namespace

TEST_CASE("loaders are deterministic per seed") {
  TpccScale scale;
  auto a = make_tpcc_engine(scale, 11);
  auto b = make_tpcc_engine(scale, 11);
  auto c = make_tpcc_engine(scale, 12);
  CHECK(a->snapshot().digest == b->snapshot().digest);
  CHECK(a->snapshot().digest != c->snapshot().digest);

  ShopScale shop;
  auto d = make_shop_engine(shop, 5);
  auto e = make_shop_engine(shop, 5);
  CHECK(d->snapshot().digest == e->snapshot().digest);
}

TEST_CASE("district sequence starts above the preloaded orders") {
  TpccScale scale;
  auto eng = make_tpcc_engine(scale, 1);
  auto row = eng->row("district", {Value::integer(1), Value::integer(1)});
  REQUIRE(row.has_value());
  CHECK((*row)[10] == Value::integer(scale.initial_orders_per_district + 1));
  CHECK(eng->table_size("district") ==
        size_t(scale.warehouses) * size_t(scale.districts_per_warehouse));
}

TEST_CASE("order entry batch matches serial execution") {
  TpccScale scale;
  auto eng = make_tpcc_engine(scale, 21);
  TpccGen gen(scale, 77);
  std::vector<json> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(gen.neworder_args_for(1, 4));

  MergedPlan plan;
  check_equivalent(*eng, neworder_exec(), batch, &plan);

  // The three orders drew ids from one allocated block, so they come back
  // consecutive, and exactly one district update carried the whole bump.
  int updates_on_district = 0;
  for (const PlannedStatement& ps : plan.statements) {
    if (ps.stmt.kind == StatementKind::Update && ps.stmt.table == "district")
      ++updates_on_district;
  }
  CHECK(updates_on_district == 1);
}

TEST_CASE("order entry ids are consecutive within a merged batch") {
  TpccScale scale;
  auto eng = make_tpcc_engine(scale, 21);
  TpccGen gen(scale, 78);
  std::vector<json> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(gen.neworder_args_for(2, 9));

  std::vector<json> out = run_merged(*eng, neworder_exec(), batch);
  REQUIRE(out.size() == 4);
  int64_t base = out[0].at("o_id").get<int64_t>();
  for (int i = 0; i < 4; ++i)
    CHECK(out[size_t(i)].at("o_id").get<int64_t>() == base + i);

  auto row = eng->row("district", {Value::integer(2), Value::integer(9)});
  REQUIRE(row.has_value());
  CHECK((*row)[10] == Value::integer(base + 4));
}

TEST_CASE("payment batch with both credit classes matches serial") {
  TpccScale scale;
  scale.bc_fraction = 0.5;
  auto eng = make_tpcc_engine(scale, 33);

  // Pick one customer of each credit class from the loaded data.
  int64_t bc = 0, gc = 0;
  for (int c = 1; c <= scale.customers_per_district && (bc == 0 || gc == 0);
       ++c) {
    auto row = eng->row(
        "customer", {Value::integer(1), Value::integer(1), Value::integer(c)});
    REQUIRE(row.has_value());
    if ((*row)[6] == Value::text("BC")) {
      if (bc == 0) bc = c;
    } else if (gc == 0) {
      gc = c;
    }
  }
  REQUIRE(bc != 0);
  REQUIRE(gc != 0);

  // The bad-credit customer pays twice in the batch, so the data chain has
  // to thread through both members in order.
  std::vector<json> batch = {payment_args_json(1, 1, bc, 1050, 900001),
                             payment_args_json(1, 1, gc, 2000, 900002),
                             payment_args_json(1, 1, bc, 333, 900003)};
  check_equivalent(*eng, payment_exec(), batch);

  // The last payment's entry heads the chain, with the earlier one behind it.
  auto after = eng->row(
      "customer", {Value::integer(1), Value::integer(1), Value::integer(bc)});
  std::string data = (*after)[13].as_text();
  std::string head = std::to_string(bc) + " 1 1 1 1 3.33|";
  CHECK(data.rfind(head, 0) == 0);
  CHECK(data.find("10.50|") != std::string::npos);
}

TEST_CASE("order totals handle empty orders and batch duplicates") {
  ShopScale scale;
  auto eng = make_shop_engine(scale, 9);

  // Order 2 is pinned to zero line items by the loader.
  std::vector<json> batch = {json{{"order_id", 2}, {"ts", 1'800'000'000'000}},
                             json{{"order_id", 7}, {"ts", 1'800'000'000'001}},
                             json{{"order_id", 2}, {"ts", 1'800'000'000'002}}};
  check_equivalent(*eng, order_total_exec(), batch);

  auto row = eng->row("orders", {Value::integer(2)});
  REQUIRE(row.has_value());
  CHECK((*row)[2] == Value::integer(0));              // item_count
  CHECK((*row)[1] == Value::decimal_scaled(0));       // item_total
  CHECK((*row)[4] == Value::timestamp(1'800'000'000'002));
}

TEST_CASE("argument generators are deterministic and respect scale") {
  TpccScale one;
  one.warehouses = 1;
  TpccGen g1(one, 5), g2(one, 5);
  for (int i = 0; i < 20; ++i) {
    json a = g1.neworder_args();
    CHECK(a == g2.neworder_args());
    for (const json& line : a.at("items"))
      CHECK(line.at("supply_w_id").get<int64_t>() == a.at("w_id").get<int64_t>());
  }

  // With several warehouses a small fraction of order lines come from a
  // remote warehouse.
  TpccScale many;
  many.warehouses = 4;
  TpccGen g3(many, 5);
  int remote = 0, lines = 0;
  for (int i = 0; i < 2000; ++i) {
    json a = g3.neworder_args();
    for (const json& line : a.at("items")) {
      ++lines;
      if (line.at("supply_w_id").get<int64_t>() != a.at("w_id").get<int64_t>())
        ++remote;
    }
  }
  CHECK(remote > 0);
  CHECK(remote < lines / 20);
}

TEST_CASE("merged select is one physical statement") {
  auto eng = make_micro_engine(100, 3);
  uint64_t before = eng->stats().statements_executed;

  std::vector<SourceStatement> sources;
  for (int i = 0; i < 8; ++i) sources.push_back({i, micro_select(i + 1)});
  MergedSelect sel = merge_selects(sources);

  auto txn = eng->begin();
  ExecSession ses(*eng, txn);
  ResultSet rs = ses.run(sel);
  eng->commit(txn);

  CHECK(eng->stats().statements_executed - before == 1);
  std::map<int, ResultSet> split = dispatch_results(rs, sel);
  REQUIRE(split.size() == 8);
  for (const auto& [slot, r] : split) CHECK(r.rows.size() == 1);
}

TEST_CASE("worker split policy covers the warehouse range") {
  PartitionPolicy p = harness::warehouse_split_policy(4, 2, 3);
  CHECK(p.version == 3);
  REQUIRE(p.rules.size() == 2);
  CHECK(p.rules[0].lo == 1);
  CHECK(p.rules[0].hi == 3);
  CHECK(p.rules[0].target == 0);
  CHECK(p.rules[1].lo == 3);
  CHECK(p.rules[1].hi == 5);
  CHECK(p.rules[1].target == 1);
}

TEST_CASE("a lone request pays the batch window, a full batch does not") {
  TpccScale scale;
  scale.warehouses = 1;
  auto eng = make_tpcc_engine(scale, 4);
  TpccGen gen(scale, 4);

  ServiceConfig waiting;
  waiting.workers = 1;
  waiting.batch_size = 8;
  waiting.batch_timeout = std::chrono::milliseconds(40);
  MergerService svc(*eng, waiting);
  svc.register_template(payment_exec());

  auto t0 = std::chrono::steady_clock::now();
  InvokeOutcome out = svc.invoke("payment", gen.payment_args());
  auto waited = std::chrono::steady_clock::now() - t0;
  CHECK(out.status == InvokeOutcome::Status::Ok);
  CHECK(waited >= std::chrono::milliseconds(30));

  ServiceConfig eager = waiting;
  eager.batch_size = 1;
  svc.set_config(eager);
  t0 = std::chrono::steady_clock::now();
  out = svc.invoke("payment", gen.payment_args());
  auto quick = std::chrono::steady_clock::now() - t0;
  CHECK(out.status == InvokeOutcome::Status::Ok);
  CHECK(quick < waited);
  svc.shutdown();
}

TEST_CASE("equivalence oracle passes on the honest implementation") {
  harness::OracleSpec spec;
  spec.trials = 60;
  spec.seed = 17;
  spec.max_batch = 5;
  spec.templates = {"neworder", "payment", "order_total"};
  harness::OracleVerdict v = harness::oracle_check(spec);
  INFO(v.summary());
  CHECK(v.passed());
  CHECK(v.merged_batches > 0);
  CHECK(v.failures.empty());
}

TEST_CASE("equivalence oracle flags a corrupted rewrite") {
  harness::OracleSpec spec;
  spec.trials = 40;
  spec.seed = 3;
  spec.max_batch = 4;
  spec.mutation = "drop-else";
  harness::OracleVerdict v = harness::oracle_check(spec);
  CHECK_FALSE(v.passed());
  REQUIRE_FALSE(v.failures.empty());
  const harness::OracleFailure& f = v.failures.front();
  CHECK((f.kind == "digest-mismatch" || f.kind == "result-mismatch"));
}
