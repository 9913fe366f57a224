#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "txmerge/analyzer.hpp"
#include "txmerge/client.hpp"
#include "txmerge/exec.hpp"
#include "txmerge/harness.hpp"
#include "txmerge/render.hpp"
#include "txmerge/service.hpp"
#include "txmerge/template_io.hpp"
#include "txmerge/tuner.hpp"
#include "txmerge/wire.hpp"
#include "txmerge/workload.hpp"

using namespace txmerge;
using nlohmann::json;

namespace {

// Loads a template file, resolving its schema either from an explicit path
// or by trying the schema files shipped next to the template.
std::pair<TransactionTemplate, Schema> load_with_schema(
    const std::string& template_path, const std::string& schema_path) {
  if (!schema_path.empty()) {
    Schema schema = load_schema_file(schema_path);
    return {load_template_file(template_path, schema), schema};
  }
  std::string dir = ".";
  size_t slash = template_path.find_last_of('/');
  if (slash != std::string::npos) dir = template_path.substr(0, slash);
  std::string last_error;
  for (const char* name : {"tpcc_schema.json", "shop_schema.json"}) {
    std::string candidate = dir + "/" + name;
    try {
      Schema schema = load_schema_file(candidate);
      return {load_template_file(template_path, schema), schema};
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  raise(Errc::ValidationError,
        "cannot resolve a schema for " + template_path +
            " (pass --schema); last attempt: " + last_error);
}

int cmd_analyze(const std::string& template_path,
                const std::string& schema_path) {
  auto [tmpl, schema] = load_with_schema(template_path, schema_path);
  MergeGroupReport report = analyze_template(tmpl);

  std::printf("transaction: %s (%d statements)\n", report.transaction.c_str(),
              tmpl.size());
  std::printf("%-10s %-20s %-9s %s\n", "range", "class", "promoted",
              "witnesses");
  for (const MergeGroup& g : report.groups) {
    std::string range = std::to_string(g.lo);
    if (g.hi != g.lo) range += ".." + std::to_string(g.hi);
    std::string wit;
    for (const ConflictWitness& w : g.witnesses) {
      if (!wit.empty()) wit += ", ";
      wit += "(" + std::to_string(w.stmt_a) + "," + std::to_string(w.stmt_b) +
             ") " + w.table + "." + w.column;
    }
    std::printf("%-10s %-20s %-9s %s\n", range.c_str(),
                g.sequential() ? "sequential_group" : "mergeable_singleton",
                g.promoted ? "yes" : "no", wit.c_str());
  }
  for (int s : report.conservative_deletes)
    std::printf("note: statement %d is a delete treated as writing every column\n", s);
  std::printf("\n%s\n\n", report.to_json().dump(2).c_str());
  std::printf("%s\n", verify_interleaving(report, tmpl).c_str());
  return 0;
}

int cmd_rewrite(const std::string& template_path, const std::string& args_path,
                const std::string& schema_path, const std::string& dialect,
                int scale_w, uint64_t seed) {
  auto [tmpl, schema] = load_with_schema(template_path, schema_path);
  json args = load_json_file(args_path);
  if (!args.is_array() || args.empty())
    raise(Errc::ValidationError, "args file must be a non-empty JSON array");
  std::vector<json> batch(args.begin(), args.end());

  // The merged recipes are built in, keyed by template name; the rewrite
  // runs against a freshly loaded sample backend so every data-dependent
  // choice (allocated ids, credit classes, carried data) is reproducible.
  std::unique_ptr<Engine> eng;
  TemplateExec exec;
  if (tmpl.name == "neworder" || tmpl.name == "payment") {
    workload::TpccScale scale;
    scale.warehouses = scale_w;
    eng = workload::make_tpcc_engine(scale, seed);
    exec = tmpl.name == "neworder" ? workload::neworder_exec()
                                   : workload::payment_exec();
  } else if (tmpl.name == "order_total") {
    eng = workload::make_shop_engine({}, seed);
    exec = workload::order_total_exec();
  } else {
    raise(Errc::UnknownTransaction,
          "no merged recipe registered for template " + tmpl.name);
  }

  auto txn = eng->begin();
  ExecSession ses(*eng, txn, true);
  exec.merged(ses, batch);
  eng->commit(txn);
  std::fputs(emit_external_sql(ses.plan(), Dialect::by_name(dialect)).c_str(),
             stdout);
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& listen) {
  json cfg = load_json_file(config_path);

  json backend = cfg.value("backend", json::object());
  std::string kind = backend.value("kind", "tpcc");
  uint64_t seed = backend.value("seed", 42);
  std::unique_ptr<Engine> eng;
  if (kind == "tpcc") {
    workload::TpccScale scale;
    scale.warehouses = backend.value("scale_w", scale.warehouses);
    eng = workload::make_tpcc_engine(scale, seed);
  } else if (kind == "shop") {
    workload::ShopScale scale;
    scale.orders = backend.value("orders", scale.orders);
    eng = workload::make_shop_engine(scale, seed);
  } else {
    raise(Errc::ValidationError, "backend.kind must be tpcc or shop");
  }

  ServiceConfig service_cfg;
  if (cfg.contains("service")) service_cfg = ServiceConfig::from_json(cfg["service"]);
  MergerService svc(*eng, service_cfg);

  std::vector<std::string> templates =
      cfg.value("templates", std::vector<std::string>{});
  if (templates.empty())
    templates = kind == "tpcc" ? std::vector<std::string>{"neworder", "payment"}
                               : std::vector<std::string>{"order_total"};
  for (const std::string& name : templates) {
    if (name == "neworder")
      svc.register_template(workload::neworder_exec());
    else if (name == "payment")
      svc.register_template(workload::payment_exec());
    else if (name == "order_total")
      svc.register_template(workload::order_total_exec());
    else
      raise(Errc::UnknownTransaction, "no executor for template " + name);
  }
  if (cfg.contains("policy"))
    svc.set_policy(PartitionPolicy::from_json(cfg["policy"]));

  auto [host, port] = parse_endpoint(listen);
  WireServer server(svc, host, port);
  std::printf("listening on %s (%s backend, %zu templates)\n",
              server.endpoint().c_str(), kind.c_str(), templates.size());
  std::fflush(stdout);

  // Serve until the process is killed.
  std::mutex mtx;
  std::condition_variable cv;
  std::unique_lock<std::mutex> lk(mtx);
  cv.wait(lk, [] { return false; });
  return 0;
}

int cmd_tune(const std::string& endpoint, const tuner::TuneOptions& opts,
             const std::string& csv_path) {
  auto [host, port] = parse_endpoint(endpoint);
  WireClient client(host, port);
  if (!client.health()) raise(Errc::ServiceUnreachable, "health check failed");

  ServiceConfig base;
  tuner::Evaluator eval = tuner::wire_evaluator(client, base, opts.window_ms);
  tuner::TuneResult result = tuner::tune(eval, opts);

  std::string csv = result.trace_csv();
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    out << csv;
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  json best{{"workers", result.recommended.workers},
            {"batch", result.recommended.batch},
            {"predicted_throughput", result.predicted_best},
            {"iterations", result.trace.size()},
            {"stopped", result.capped ? "capped" : "converged"}};
  std::printf("%s\n", best.dump().c_str());

  // Leave the service running at the recommendation.
  ServiceConfig final_cfg = base;
  final_cfg.workers = result.recommended.workers;
  final_cfg.batch_size = result.recommended.batch;
  client.set_config(final_cfg);
  return 0;
}

int cmd_bench(const harness::WorkloadSpec& spec, const std::string& csv_path) {
  std::vector<harness::CsvRow> rows = harness::run_bench(spec);
  std::printf("%s\n", harness::csv_header().c_str());
  for (const harness::CsvRow& r : rows)
    std::printf("%s\n", harness::to_csv_line(r).c_str());
  if (!csv_path.empty()) harness::write_csv(csv_path, rows);
  return 0;
}

int cmd_oracle(const harness::OracleSpec& spec) {
  harness::OracleVerdict v = harness::oracle_check(spec);
  std::printf("%s\n", v.summary().c_str());
  for (const harness::OracleFailure& f : v.failures) {
    std::printf("trial %d (%s) %s: %s\n", f.trial, f.txn.c_str(),
                f.kind.c_str(), f.detail.c_str());
  }
  return v.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transaction merging middleware"};
  app.require_subcommand(1);

  // analyze
  std::string template_path, schema_path;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Print the merge-group report for a template");
  analyze->add_option("template", template_path, "template JSON file")
      ->required();
  analyze->add_option("--schema", schema_path, "schema JSON file");

  // rewrite
  std::string args_path, dialect = "generic";
  int rw_scale_w = 2;
  uint64_t rw_seed = 42;
  CLI::App* rewrite = app.add_subcommand(
      "rewrite", "Emit the merged SQL script for a batch of arguments");
  rewrite->add_option("template", template_path, "template JSON file")
      ->required();
  rewrite->add_option("args", args_path, "JSON array of invocation arguments")
      ->required();
  rewrite->add_option("--schema", schema_path, "schema JSON file");
  rewrite->add_option("--dialect", dialect, "SQL dialect name");
  rewrite->add_option("--scale-w", rw_scale_w, "sample backend warehouses");
  rewrite->add_option("--seed", rw_seed, "sample backend seed");

  // serve
  std::string config_path, listen = "127.0.0.1:7441";
  CLI::App* serve =
      app.add_subcommand("serve", "Run the merging service over TCP");
  serve->add_option("--config", config_path, "service config JSON file")
      ->required();
  serve->add_option("--listen", listen, "host:port to bind");

  // tune
  std::string endpoint = "127.0.0.1:7441", tune_csv;
  tuner::TuneOptions topts;
  CLI::App* tune =
      app.add_subcommand("tune", "Search worker/batch settings over the wire");
  tune->add_option("--endpoint", endpoint, "service host:port");
  tune->add_option("--wmax", topts.wmax, "max workers");
  tune->add_option("--bmax", topts.bmax, "max batch size");
  tune->add_option("--window-ms", topts.window_ms,
                   "measurement window per configuration");
  tune->add_option("--seed", topts.seed, "search seed");
  tune->add_option("--init-samples", topts.init_samples,
                   "random probes before the model-guided phase");
  tune->add_option("--max-iterations", topts.max_iterations,
                   "model-guided iteration cap");
  tune->add_option("--csv", tune_csv, "write the trace CSV here");

  // bench
  harness::WorkloadSpec wspec;
  std::string bench_csv;
  CLI::App* bench =
      app.add_subcommand("bench", "Measure a workload across merge modes");
  bench->add_option("--workload", wspec.workload,
                    "micro-select|micro-insert|micro-update|"
                    "micro-update-contended|micro-delete|neworder|payment|"
                    "mixed|order-total");
  bench->add_option("--mode", wspec.mode, "mode or 'all'");
  bench->add_option("--scale-w", wspec.scale_w, "warehouses");
  bench->add_option("--rows", wspec.micro_rows, "micro table rows");
  bench->add_option("--clients", wspec.clients, "client threads");
  bench->add_option("--batch", wspec.batch_sizes,
                    "batch size (repeatable for a sweep)");
  bench->add_option("--duration-s", wspec.duration_s, "seconds per cell");
  bench->add_option("--seed", wspec.seed, "workload seed");
  bench->add_option("--csv", bench_csv, "also write rows to this file");

  // oracle-check
  harness::OracleSpec ospec;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "Compare merged execution against serial execution");
  oracle->add_option("--trials", ospec.trials, "number of random batches");
  oracle->add_option("--seed", ospec.seed, "trial seed");
  oracle->add_option("--max-batch", ospec.max_batch, "largest batch size");
  oracle->add_option("--template", ospec.templates,
                     "template name (repeatable)");
  oracle->add_option("--mutation", ospec.mutation,
                     "none | drop-else (self-test of the oracle)");
  oracle->add_option("--scale-w", ospec.scale_w, "warehouses");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) return cmd_analyze(template_path, schema_path);
    if (*rewrite)
      return cmd_rewrite(template_path, args_path, schema_path, dialect,
                         rw_scale_w, rw_seed);
    if (*serve) return cmd_serve(config_path, listen);
    if (*tune) return cmd_tune(endpoint, topts, tune_csv);
    if (*bench) return cmd_bench(wspec, bench_csv);
    if (*oracle) return cmd_oracle(ospec);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
