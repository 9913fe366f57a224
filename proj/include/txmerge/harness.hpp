#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "txmerge/service.hpp"
#include "txmerge/workload.hpp"

namespace txmerge::harness {

// Closed-loop benchmark driver and serial-equivalence checker for the
// built-in workloads.  The micro workloads rewrite statements client-side
// against a bare engine; the order-entry and shop workloads drive an
// in-process MergerService the way a remote client would.

struct WorkloadSpec {
  // micro-select | micro-insert | micro-update | micro-update-contended |
  // micro-delete | neworder | payment | mixed | order-total
  std::string workload = "micro-select";
  // micro modes: original | batched | merged; service modes: original |
  // intra-merged | service-merged; "all" sweeps every mode of the family.
  std::string mode = "all";
  int scale_w = 2;
  int micro_rows = 10'000;
  int clients = 4;
  std::vector<int> batch_sizes = {1, 2, 4, 8, 16, 32};
  double duration_s = 2.0;
  uint64_t seed = 42;
};

// One benchmark measurement.  Micro rows report logical statements per
// second (a merged call counts once per member statement it replaced);
// service rows report completed transactions per second.  stmts_executed is
// the backend's physical statement count for the measured window, so the
// merge ratio is logical work divided by this number.
struct CsvRow {
  std::string workload;
  std::string mode;
  int batch = 1;
  int clients = 1;
  double throughput = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  uint64_t retries = 0;
  uint64_t stmts_executed = 0;
};

std::string csv_header();
std::string to_csv_line(const CsvRow& row);
void write_csv(const std::string& path, const std::vector<CsvRow>& rows);

// Benchmark runners; each returns one row per (mode, batch size) cell.
std::vector<CsvRow> run_micro(const WorkloadSpec& spec);
std::vector<CsvRow> run_neworder(const WorkloadSpec& spec);
std::vector<CsvRow> run_payment(const WorkloadSpec& spec);
std::vector<CsvRow> run_mixed(const WorkloadSpec& spec);
std::vector<CsvRow> run_order_total(const WorkloadSpec& spec);
std::vector<CsvRow> run_bench(const WorkloadSpec& spec);  // dispatch by name

// Evenly splits warehouses 1..warehouses across workers by contiguous range.
PartitionPolicy warehouse_split_policy(int warehouses, int workers,
                                       uint64_t version);

// Client-side retry loop with jittered exponential backoff; the service
// never re-executes a timed-out transaction on its own.
InvokeOutcome submit_with_retry(MergerService& svc, const std::string& txn,
                                nlohmann::json args, std::mt19937_64& rng,
                                int max_attempts, uint64_t* retries);

// ------------------------------------------------------ equivalence oracle

// Freezes a random batch of arguments, runs the members one-by-one on a
// cloned engine, runs them through the merging service on the live engine,
// and requires identical per-member results and identical state digests.
// The drop-else mutation deliberately corrupts the merged order-total
// rewrite (see OrderTotalOptions); a healthy oracle must flag every trial.
struct OracleSpec {
  int trials = 1000;
  uint64_t seed = 7;
  int max_batch = 8;
  std::vector<std::string> templates = {"neworder", "payment"};
  std::string mutation = "none";  // none | drop-else
  int scale_w = 2;
};

struct OracleFailure {
  int trial = 0;
  std::string txn;
  std::string kind;  // status | result-mismatch | digest-mismatch | fallback
  std::string detail;
};

struct OracleVerdict {
  int trials = 0;
  uint64_t merged_batches = 0;  // anti-vacuity: > 0 or the check proved nothing
  std::vector<OracleFailure> failures;

  bool passed() const { return failures.empty() && merged_batches > 0; }
  std::string summary() const;
};

OracleVerdict oracle_check(const OracleSpec& spec);

}  // namespace txmerge::harness
