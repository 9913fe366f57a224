#include <cstdlib>
#include <string>

#include "doctest.h"
#include "txmerge/analyzer.hpp"
#include "txmerge/template_io.hpp"
#include "txmerge/workload.hpp"

using namespace txmerge;
using namespace txmerge::workload;

// The template directory ships declarative JSON copies of the built-in
// transaction definitions for use from the command line.  Setting
// TXMERGE_REGEN rewrites them from the source of truth; the checks below
// hold the two representations equal.

namespace {

const std::string kDir = TXMERGE_TEMPLATE_DIR;

void regen_if_requested() {
  static bool done = false;
  if (done) return;
  done = true;
  if (!std::getenv("TXMERGE_REGEN")) return;
  save_json_file(kDir + "/tpcc_schema.json", tpcc_schema().to_json());
  save_json_file(kDir + "/shop_schema.json", shop_schema().to_json());
  save_json_file(kDir + "/neworder.json", template_to_json(neworder_template()));
  save_json_file(kDir + "/payment.json", template_to_json(payment_template()));
  save_json_file(kDir + "/order_total.json",
                 template_to_json(order_total_template()));
}

}  // namespace

TEST_CASE("schema files match the built-in schemas") {
  regen_if_requested();
  CHECK(load_schema_file(kDir + "/tpcc_schema.json").to_json() ==
        tpcc_schema().to_json());
  CHECK(load_schema_file(kDir + "/shop_schema.json").to_json() ==
        shop_schema().to_json());
}

TEST_CASE("template files round-trip to the built-in definitions") {
  regen_if_requested();
  Schema tpcc = tpcc_schema();
  Schema shop = shop_schema();

  struct Row {
    std::string file;
    const Schema* schema;
    TransactionTemplate built;
  };
  const Row rows[] = {
      {"neworder.json", &tpcc, neworder_template()},
      {"payment.json", &tpcc, payment_template()},
      {"order_total.json", &shop, order_total_template()},
  };
  for (const Row& r : rows) {
    CAPTURE(r.file);
    TransactionTemplate loaded = load_template_file(kDir + "/" + r.file, *r.schema);
    CHECK(template_to_json(loaded) == template_to_json(r.built));
    // A loaded template must drive the analyzer to the same conclusions.
    CHECK(analyze_template(loaded).to_json() ==
          analyze_template(r.built).to_json());
  }
}
