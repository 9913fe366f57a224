#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "txmerge/engine.hpp"
#include "txmerge/service.hpp"

namespace txmerge::workload {

// Built-in workloads: a single-table micro benchmark, a warehouse/district
// order-entry workload (new-order and payment over the usual nine tables),
// and a shop order-total workload exercising grouped aggregates.  Each
// workload contributes a schema, a deterministic seeded loader, an argument
// generator, a declarative transaction template (for analysis, display and
// serialization), and service executors implementing the per-invocation
// original form and the batched merged form of the same transaction.

// ---------------------------------------------------------------- schemas

Schema micro_schema();  // t(id, value)
Schema tpcc_schema();   // warehouse .. history
Schema shop_schema();   // orders + line_items

// ------------------------------------------------------------ scale knobs

struct TpccScale {
  int warehouses = 2;
  int districts_per_warehouse = 10;
  int customers_per_district = 30;
  int items = 1000;
  int initial_orders_per_district = 30;  // one per customer by default
  double bc_fraction = 0.01;             // customers loaded with bad credit
  double remote_payment_fraction = 0.15;
  int min_order_lines = 3;
  int max_order_lines = 5;
};

struct ShopScale {
  int orders = 200;
  int max_lines_per_order = 6;  // per-order line count drawn from 0..max
};

// ------------------------------------------------------ deterministic load

void load_micro(Engine& eng, int rows, uint64_t seed);
void load_tpcc(Engine& eng, const TpccScale& scale, uint64_t seed);
void load_shop(Engine& eng, const ShopScale& scale, uint64_t seed);

std::unique_ptr<Engine> make_micro_engine(int rows, uint64_t seed,
                                          EngineOptions opts = {});
std::unique_ptr<Engine> make_tpcc_engine(const TpccScale& scale, uint64_t seed,
                                         EngineOptions opts = {});
std::unique_ptr<Engine> make_shop_engine(const ShopScale& scale, uint64_t seed,
                                         EngineOptions opts = {});

// ------------------------------------------------------------- templates

// Declarative statement lists with access sets, loop markers and dataflow
// notes; input to the conflict analyzer and the template JSON files.  The
// executors below implement the same statements programmatically.
TransactionTemplate neworder_template();
TransactionTemplate payment_template();
TransactionTemplate order_total_template();

// -------------------------------------------------------- arg generation

// Zipf(theta) over 1..n via inverse CDF lookup; deterministic per rng.
class ZipfSampler {
 public:
  ZipfSampler(int n, double theta);
  int sample(std::mt19937_64& rng) const;

 private:
  std::vector<double> cdf_;
};

// Seeded argument generator for the order-entry workload.  Districts are
// uniform, items Zipf-skewed, payment customers occasionally remote.  All
// timestamps come from an internal logical clock so runs are reproducible
// and the serial-equivalence oracle can replay the exact arguments.
class TpccGen {
 public:
  TpccGen(TpccScale scale, uint64_t seed, int64_t id_base = 0);

  nlohmann::json neworder_args();
  nlohmann::json neworder_args_for(int w_id, int d_id);
  nlohmann::json payment_args();
  nlohmann::json payment_args_for(int w_id, int d_id);

 private:
  TpccScale scale_;
  std::mt19937_64 rng_;
  ZipfSampler item_zipf_;
  int64_t next_h_id_;
  int64_t clock_ms_;
};

class ShopGen {
 public:
  ShopGen(ShopScale scale, uint64_t seed);

  nlohmann::json order_total_args();

 private:
  ShopScale scale_;
  std::mt19937_64 rng_;
  int64_t clock_ms_;
};

// --------------------------------------------------------- service hooks

// intra_only swaps the per-invocation handler for the merged recipe applied
// to a batch of one, so a single order still folds its per-item loop into
// IN selects, a multi-row insert and one CASE WHEN update.
TemplateExec neworder_exec(bool intra_only = false);
TemplateExec payment_exec(bool intra_only = false);

struct OrderTotalOptions {
  bool intra_only = false;
  // Deliberate corruption hooks for the equivalence oracle's self-test: the
  // final order update additionally matches corrupt_widen_order_id and the
  // CASE arms lose their ELSE, so rows outside the batch get NULLed.  A
  // working oracle must flag the run.  Never set outside tests.
  bool corrupt_drop_else = false;
  int64_t corrupt_widen_order_id = 0;
};
TemplateExec order_total_exec(OrderTotalOptions opts = {});

// ------------------------------------------------- micro statement forms

Statement micro_select(int64_t id);
Statement micro_insert(int64_t id, int64_t value);
Statement micro_update_set(int64_t id, int64_t value);
Statement micro_update_delta(int64_t id, int64_t by);
Statement micro_delete(int64_t id);

}  // namespace txmerge::workload
