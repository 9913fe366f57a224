#include "txmerge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "txmerge/rewriter.hpp"

namespace txmerge::harness {

using nlohmann::json;
using workload::OrderTotalOptions;
using workload::ShopGen;
using workload::ShopScale;
using workload::TpccGen;
using workload::TpccScale;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double percentile(std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  double rank = p / 100.0 * static_cast<double>(sorted.size());
  size_t idx = static_cast<size_t>(std::ceil(rank));
  if (idx > 0) --idx;
  if (idx >= sorted.size()) idx = sorted.size() - 1;
  return sorted[idx];
}

void fill_percentiles(std::vector<double> latencies, CsvRow& row) {
  std::sort(latencies.begin(), latencies.end());
  row.p50_ms = percentile(latencies, 50);
  row.p95_ms = percentile(latencies, 95);
  row.p99_ms = percentile(latencies, 99);
}

}  // namespace

// --------------------------------------------------------------------- csv

std::string csv_header() {
  return "workload,mode,batch,clients,throughput,p50_ms,p95_ms,p99_ms,"
         "retries,stmts_executed";
}

std::string to_csv_line(const CsvRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.2f,%.4f,%.4f,%.4f,%llu,%llu",
                r.workload.c_str(), r.mode.c_str(), r.batch, r.clients,
                r.throughput, r.p50_ms, r.p95_ms, r.p99_ms,
                static_cast<unsigned long long>(r.retries),
                static_cast<unsigned long long>(r.stmts_executed));
  return buf;
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) raise(Errc::InternalError, "cannot write " + path);
  out << csv_header() << "\n";
  for (const CsvRow& r : rows) out << to_csv_line(r) << "\n";
}

// ------------------------------------------------------------------- micro

namespace {

enum class MicroMode { Original, Batched, Merged };

MicroMode parse_micro_mode(const std::string& m) {
  if (m == "original") return MicroMode::Original;
  if (m == "batched") return MicroMode::Batched;
  if (m == "merged") return MicroMode::Merged;
  raise(Errc::ValidationError, "unknown micro mode: " + m);
}

// One measurement cell: a fresh engine, one mode, one batch size.  Work is
// split into repetitions and the best repetition wins, which filters out
// scheduler noise without changing what is measured.
struct MicroCellResult {
  double throughput = 0.0;
  std::vector<double> latencies_ms;
  uint64_t stmts_executed = 0;
};

class MicroCell {
 public:
  MicroCell(const WorkloadSpec& spec, MicroMode mode, int k)
      : spec_(spec),
        mode_(mode),
        k_(k),
        engine_(workload::make_micro_engine(spec.micro_rows, spec.seed)),
        rng_(spec.seed ^ (static_cast<uint64_t>(k) * 0x9e3779b97f4a7c15ull)),
        id_dist_(1, spec.micro_rows),
        val_dist_(0, 999'999),
        next_insert_id_(spec.micro_rows + 1) {}

  MicroCellResult run() {
    // Warm up, then calibrate the per-repetition iteration count so three
    // repetitions roughly fill the requested duration.
    run_iterations(std::min(64, 16 + k_), nullptr);
    Clock::time_point c0 = Clock::now();
    run_iterations(16, nullptr);
    double probe = std::max(seconds_between(c0, Clock::now()), 1e-6);
    double target = std::max(spec_.duration_s, 0.05) / 3.0;
    int iters = static_cast<int>(16.0 * target / probe);
    iters = std::clamp(iters, 20, 500'000);

    MicroCellResult best;
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<double> lat;
      lat.reserve(static_cast<size_t>(iters));
      uint64_t s0 = engine_->stats().statements_executed;
      Clock::time_point t0 = Clock::now();
      run_iterations(iters, &lat);
      double elapsed = seconds_between(t0, Clock::now());
      uint64_t s1 = engine_->stats().statements_executed;
      double tput = static_cast<double>(iters) * k_ / elapsed;
      if (tput > best.throughput) {
        best.throughput = tput;
        best.latencies_ms = std::move(lat);
        best.stmts_executed = s1 - s0;
      }
    }
    return best;
  }

 private:
  void run_iterations(int iters, std::vector<double>* lat) {
    for (int i = 0; i < iters; ++i) {
      Clock::time_point s = Clock::now();
      iteration();
      if (lat) lat->push_back(ms_between(s, Clock::now()));
    }
  }

  void iteration() {
    const std::string& w = spec_.workload;
    if (w == "micro-select") {
      run_statements(draw_ids(false), [](int64_t id, int64_t) {
        return workload::micro_select(id);
      });
    } else if (w == "micro-update") {
      run_statements(draw_ids(true), [this](int64_t id, int64_t j) {
        return workload::micro_update_set(id, val_dist_(rng_) + j);
      });
    } else if (w == "micro-update-contended") {
      std::vector<int64_t> hot(static_cast<size_t>(k_), 1);
      run_statements(hot, [](int64_t id, int64_t) {
        return workload::micro_update_delta(id, 1);
      });
    } else if (w == "micro-insert") {
      std::vector<int64_t> ids;
      for (int j = 0; j < k_; ++j) ids.push_back(next_insert_id_++);
      run_statements(ids, [this](int64_t id, int64_t) {
        return workload::micro_insert(id, val_dist_(rng_));
      });
    } else if (w == "micro-delete") {
      if (delete_phase_) {
        pending_.clear();
        for (int j = 0; j < k_; ++j) {
          pending_.push_back(cursor_ % spec_.micro_rows + 1);
          ++cursor_;
        }
        run_statements(pending_, [](int64_t id, int64_t) {
          return workload::micro_delete(id);
        });
      } else {
        run_statements(pending_, [this](int64_t id, int64_t) {
          return workload::micro_insert(id, val_dist_(rng_));
        });
      }
      delete_phase_ = !delete_phase_;
    } else {
      raise(Errc::ValidationError, "unknown micro workload: " + w);
    }
  }

  std::vector<int64_t> draw_ids(bool distinct) {
    std::vector<int64_t> ids;
    ids.reserve(static_cast<size_t>(k_));
    std::set<int64_t> seen;
    while (static_cast<int>(ids.size()) < k_) {
      int64_t id = id_dist_(rng_);
      if (distinct && !seen.insert(id).second) continue;
      ids.push_back(id);
    }
    return ids;
  }

  // Runs k statements built by `make` in the cell's mode: k transactions,
  // one transaction with k statements, or one transaction with one merged
  // statement (results still dispatched back per member, as a client must).
  template <typename MakeStmt>
  void run_statements(const std::vector<int64_t>& ids, MakeStmt make) {
    Engine& eng = *engine_;
    if (mode_ == MicroMode::Original) {
      for (size_t j = 0; j < ids.size(); ++j) {
        TxnId t = eng.begin();
        eng.execute(t, make(ids[j], static_cast<int64_t>(j)));
        eng.commit(t);
      }
      return;
    }
    if (mode_ == MicroMode::Batched) {
      TxnId t = eng.begin();
      for (size_t j = 0; j < ids.size(); ++j)
        eng.execute(t, make(ids[j], static_cast<int64_t>(j)));
      eng.commit(t);
      return;
    }
    std::vector<SourceStatement> src;
    src.reserve(ids.size());
    for (size_t j = 0; j < ids.size(); ++j)
      src.push_back({static_cast<int>(j), make(ids[j], static_cast<int64_t>(j))});
    TxnId t = eng.begin();
    switch (src[0].stmt.kind) {
      case StatementKind::Select: {
        MergedSelect ms = merge_selects(src);
        ResultSet rs = eng.execute(t, ms.stmt);
        dispatch_results(rs, ms);
        break;
      }
      case StatementKind::Insert:
        eng.execute(t, merge_inserts(src));
        break;
      case StatementKind::Update:
        if (src[0].stmt.assignments[0].expr.kind == AssignExpr::Kind::Delta)
          eng.execute(t, aggregate_delta_updates(src));
        else
          eng.execute(t, merge_updates(src));
        break;
      case StatementKind::Delete:
        eng.execute(t, merge_deletes(src));
        break;
    }
    eng.commit(t);
  }

  const WorkloadSpec& spec_;
  MicroMode mode_;
  int k_;
  std::unique_ptr<Engine> engine_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<int64_t> id_dist_;
  std::uniform_int_distribution<int64_t> val_dist_;
  int64_t next_insert_id_;
  int64_t cursor_ = 0;
  bool delete_phase_ = true;
  std::vector<int64_t> pending_;
};

}  // namespace

std::vector<CsvRow> run_micro(const WorkloadSpec& spec) {
  std::vector<std::string> modes =
      spec.mode == "all" ? std::vector<std::string>{"original", "batched",
                                                    "merged"}
                         : std::vector<std::string>{spec.mode};
  std::vector<CsvRow> rows;
  for (int k : spec.batch_sizes) {
    for (const std::string& mode : modes) {
      MicroCell cell(spec, parse_micro_mode(mode), k);
      MicroCellResult res = cell.run();
      CsvRow row;
      row.workload = spec.workload;
      row.mode = mode;
      row.batch = k;
      row.clients = 1;
      row.throughput = res.throughput;
      row.retries = 0;
      row.stmts_executed = res.stmts_executed;
      fill_percentiles(std::move(res.latencies_ms), row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ----------------------------------------------------------------- service

PartitionPolicy warehouse_split_policy(int warehouses, int workers,
                                       uint64_t version) {
  PartitionPolicy policy;
  policy.version = version;
  policy.fallback = 0;
  workers = std::max(1, workers);
  for (int i = 0; i < workers; ++i) {
    int64_t lo = 1 + static_cast<int64_t>(i) * warehouses / workers;
    int64_t hi = 1 + static_cast<int64_t>(i + 1) * warehouses / workers;
    if (lo < hi) policy.rules.push_back({lo, hi, i});
  }
  return policy;
}

InvokeOutcome submit_with_retry(MergerService& svc, const std::string& txn,
                                json args, std::mt19937_64& rng,
                                int max_attempts, uint64_t* retries) {
  for (int attempt = 0;; ++attempt) {
    InvokeOutcome out = svc.invoke(txn, args);
    if (out.status != InvokeOutcome::Status::Retry ||
        attempt + 1 >= max_attempts)
      return out;
    if (retries) ++*retries;
    int64_t base_us = 100ll << std::min(attempt, 6);
    std::uniform_int_distribution<int64_t> jitter(0, base_us);
    std::this_thread::sleep_for(
        std::chrono::microseconds(base_us + jitter(rng)));
  }
}

namespace {

std::vector<CsvRow> run_service_bench(const WorkloadSpec& spec,
                                      const std::string& workload) {
  std::vector<std::string> modes =
      spec.mode == "all"
          ? std::vector<std::string>{"original", "intra-merged",
                                     "service-merged"}
          : std::vector<std::string>{spec.mode};

  bool shop = workload == "order-total";
  // Reject bad names here; the client threads assume the dispatch below
  // always lands on a known branch.
  if (!shop && workload != "neworder" && workload != "payment" &&
      workload != "mixed") {
    raise(Errc::ValidationError, "unknown workload: " + workload);
  }
  TpccScale scale;
  scale.warehouses = std::max(1, spec.scale_w);
  ShopScale shop_scale;

  std::vector<CsvRow> rows;
  for (int batch : spec.batch_sizes) {
    for (const std::string& mode : modes) {
      bool intra = mode == "intra-merged";
      bool service_merged = mode == "service-merged";
      if (!intra && !service_merged && mode != "original")
        raise(Errc::ValidationError, "unknown service mode: " + mode);

      std::unique_ptr<Engine> eng =
          shop ? workload::make_shop_engine(shop_scale, spec.seed)
               : workload::make_tpcc_engine(scale, spec.seed);
      uint64_t stmts0 = eng->stats().statements_executed;

      ServiceConfig cfg;
      cfg.workers = shop ? 1 : std::max(1, std::min(spec.clients,
                                                    scale.warehouses));
      cfg.batch_size = batch;
      cfg.batch_timeout = std::chrono::milliseconds(5);
      cfg.merge_default = service_merged;
      MergerService svc(*eng, cfg);
      if (shop) {
        OrderTotalOptions opts;
        opts.intra_only = intra;
        svc.register_template(workload::order_total_exec(opts));
      } else {
        svc.register_template(workload::neworder_exec(intra));
        svc.register_template(workload::payment_exec(intra));
        svc.set_policy(warehouse_split_policy(scale.warehouses, cfg.workers, 1));
      }

      std::atomic<uint64_t> completed{0}, retries{0}, errors{0};
      std::mutex lat_mtx;
      std::vector<double> latencies;

      Clock::time_point start = Clock::now();
      Clock::time_point deadline =
          start + std::chrono::duration_cast<Clock::duration>(
                      std::chrono::duration<double>(spec.duration_s));

      std::vector<std::thread> threads;
      for (int c = 0; c < std::max(1, spec.clients); ++c) {
        threads.emplace_back([&, c]() {
          TpccGen gen(scale, spec.seed * 7919 + static_cast<uint64_t>(c) + 1,
                      static_cast<int64_t>(c + 1) * 10'000'000);
          ShopGen sgen(shop_scale,
                       spec.seed * 104'729 + static_cast<uint64_t>(c) + 1);
          std::mt19937_64 retry_rng(spec.seed + 31ull * (c + 1));
          std::bernoulli_distribution coin(0.5);
          std::vector<double> local_lat;
          uint64_t local_retries = 0;

          while (Clock::now() < deadline) {
            std::string txn;
            json args;
            if (workload == "neworder") {
              txn = "neworder";
              args = gen.neworder_args();
            } else if (workload == "payment") {
              txn = "payment";
              args = gen.payment_args();
            } else if (workload == "mixed") {
              if (coin(retry_rng)) {
                txn = "neworder";
                args = gen.neworder_args();
              } else {
                txn = "payment";
                args = gen.payment_args();
              }
            } else if (workload == "order-total") {
              txn = "order_total";
              args = sgen.order_total_args();
            } else {
              raise(Errc::ValidationError, "unknown workload: " + workload);
            }

            Clock::time_point s = Clock::now();
            InvokeOutcome out = submit_with_retry(svc, txn, std::move(args),
                                                  retry_rng, 8, &local_retries);
            local_lat.push_back(ms_between(s, Clock::now()));
            if (out.status == InvokeOutcome::Status::Ok)
              completed.fetch_add(1);
            else
              errors.fetch_add(1);
          }

          retries.fetch_add(local_retries);
          std::lock_guard<std::mutex> lk(lat_mtx);
          latencies.insert(latencies.end(), local_lat.begin(), local_lat.end());
        });
      }
      for (std::thread& t : threads) t.join();
      double elapsed = seconds_between(start, Clock::now());
      svc.shutdown();

      if (errors.load() > 0)
        raise(Errc::InternalError,
              workload + "/" + mode + ": " + std::to_string(errors.load()) +
                  " invocations failed");

      CsvRow row;
      row.workload = workload;
      row.mode = mode;
      row.batch = batch;
      row.clients = std::max(1, spec.clients);
      row.throughput = static_cast<double>(completed.load()) / elapsed;
      row.retries = retries.load();
      row.stmts_executed = eng->stats().statements_executed - stmts0;
      fill_percentiles(std::move(latencies), row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<CsvRow> run_neworder(const WorkloadSpec& spec) {
  return run_service_bench(spec, "neworder");
}
std::vector<CsvRow> run_payment(const WorkloadSpec& spec) {
  return run_service_bench(spec, "payment");
}
std::vector<CsvRow> run_mixed(const WorkloadSpec& spec) {
  return run_service_bench(spec, "mixed");
}
std::vector<CsvRow> run_order_total(const WorkloadSpec& spec) {
  return run_service_bench(spec, "order-total");
}

std::vector<CsvRow> run_bench(const WorkloadSpec& spec) {
  if (spec.workload.rfind("micro", 0) == 0) return run_micro(spec);
  return run_service_bench(spec, spec.workload);
}

// ------------------------------------------------------ equivalence oracle

namespace {

std::string truncated(std::string s, size_t cap) {
  if (s.size() > cap) {
    s.resize(cap);
    s += "...";
  }
  return s;
}

// Serial reference: each member in its own transaction, in submission order,
// against a clone of the pre-batch state.
std::vector<json> run_serial(Engine& clone, const TemplateExec& exec,
                             const std::vector<json>& batch) {
  std::vector<json> out;
  out.reserve(batch.size());
  for (const json& args : batch) {
    TxnId txn = clone.begin();
    ExecSession ses(clone, txn);
    out.push_back(exec.original(ses, args));
    clone.commit(txn);
  }
  return out;
}

}  // namespace

std::string OracleVerdict::summary() const {
  std::string s = "trials=" + std::to_string(trials) +
                  " merged_batches=" + std::to_string(merged_batches) +
                  " failures=" + std::to_string(failures.size());
  if (!failures.empty())
    s += " (first: " + failures.front().kind + " in " + failures.front().txn +
         " trial " + std::to_string(failures.front().trial) + ")";
  return s;
}

OracleVerdict oracle_check(const OracleSpec& os) {
  OracleVerdict verdict;
  verdict.trials = os.trials;
  std::mt19937_64 rng(os.seed);

  bool mutate = os.mutation == "drop-else";
  if (os.mutation != "none" && !mutate)
    raise(Errc::ValidationError, "unknown mutation: " + os.mutation);

  std::vector<std::string> tmpls = os.templates;
  if (mutate) tmpls = {"order_total"};
  if (tmpls.empty()) raise(Errc::ValidationError, "oracle needs templates");

  bool needs_tpcc = false, needs_shop = false;
  for (const std::string& t : tmpls) {
    if (t == "neworder" || t == "payment")
      needs_tpcc = true;
    else if (t == "order_total" || t == "order-total")
      needs_shop = true;
    else
      raise(Errc::ValidationError, "unknown oracle template: " + t);
  }

  // A quarter of customers pay on bad credit so the data-chain path gets
  // real coverage instead of the default trickle.
  TpccScale scale;
  scale.warehouses = std::max(1, os.scale_w);
  scale.bc_fraction = 0.25;
  ShopScale shop_scale;

  ServiceConfig cfg;
  cfg.workers = 1;
  cfg.batch_size = os.max_batch;
  cfg.batch_timeout = std::chrono::milliseconds(250);

  std::unique_ptr<Engine> tpcc_eng, shop_eng;
  std::unique_ptr<MergerService> tpcc_svc, shop_svc;
  std::map<std::string, TemplateExec> reference;

  if (needs_tpcc) {
    tpcc_eng = workload::make_tpcc_engine(scale, os.seed);
    tpcc_svc = std::make_unique<MergerService>(*tpcc_eng, cfg);
    tpcc_svc->register_template(workload::neworder_exec());
    tpcc_svc->register_template(workload::payment_exec());
    reference["neworder"] = workload::neworder_exec();
    reference["payment"] = workload::payment_exec();
  }
  if (needs_shop) {
    shop_eng = workload::make_shop_engine(shop_scale, os.seed);
    shop_svc = std::make_unique<MergerService>(*shop_eng, cfg);
    OrderTotalOptions opts;
    if (mutate) {
      opts.corrupt_drop_else = true;
      opts.corrupt_widen_order_id = 1;  // live row no trial batch may touch
    }
    shop_svc->register_template(workload::order_total_exec(opts));
    reference["order_total"] = workload::order_total_exec();
  }

  TpccGen gen(scale, os.seed + 1);
  ShopGen sgen(shop_scale, os.seed + 2);
  // Batches of one bypass the merged recipe entirely, so the mutation check
  // must draw real batches or it would vacuously pass.
  int min_batch = mutate ? 2 : 1;
  if (os.max_batch < min_batch)
    raise(Errc::ValidationError, "mutation check needs max_batch >= 2");
  std::uniform_int_distribution<int> batch_dist(min_batch,
                                                std::max(min_batch, os.max_batch));
  std::uniform_int_distribution<size_t> tmpl_dist(0, tmpls.size() - 1);

  for (int trial = 0; trial < os.trials; ++trial) {
    std::string tname = tmpls[tmpl_dist(rng)];
    if (tname == "order-total") tname = "order_total";
    bool shop = tname == "order_total";
    Engine& eng = shop ? *shop_eng : *tpcc_eng;
    MergerService& svc = shop ? *shop_svc : *tpcc_svc;

    int n = batch_dist(rng);
    std::vector<json> batch;
    batch.reserve(static_cast<size_t>(n));
    if (shop) {
      for (int k = 0; k < n; ++k) {
        json a = sgen.order_total_args();
        // Order 1 is reserved as the mutation's widening target; a batch
        // that touched it would hide the corruption.
        while (a.at("order_id").get<int64_t>() == 1)
          a = sgen.order_total_args();
        batch.push_back(std::move(a));
      }
    } else {
      // One merge key per trial so the whole batch lands in one worker
      // deque and merges into a single backend transaction.
      std::uniform_int_distribution<int> wd(1, scale.warehouses);
      std::uniform_int_distribution<int> dd(1, scale.districts_per_warehouse);
      int w = wd(rng), d = dd(rng);
      for (int k = 0; k < n; ++k)
        batch.push_back(tname == "neworder" ? gen.neworder_args_for(w, d)
                                            : gen.payment_args_for(w, d));
    }

    // Workers are idle between trials, so the new batch size applies to
    // this trial's batch exactly.
    ServiceConfig trial_cfg = cfg;
    trial_cfg.batch_size = n;
    svc.set_config(trial_cfg);

    std::unique_ptr<Engine> clone = eng.clone();
    std::vector<json> serial = run_serial(*clone, reference.at(tname), batch);

    ServiceStats before = svc.stats();
    std::vector<std::future<InvokeOutcome>> futs;
    futs.reserve(batch.size());
    for (const json& args : batch) futs.push_back(svc.submit(tname, args));
    std::vector<InvokeOutcome> outcomes;
    outcomes.reserve(futs.size());
    for (auto& f : futs) outcomes.push_back(f.get());
    ServiceStats after = svc.stats();

    verdict.merged_batches += after.merged_batches - before.merged_batches;
    if (after.merge_fallbacks != before.merge_fallbacks)
      verdict.failures.push_back(
          {trial, tname, "fallback",
           "merged execution fell back to member isolation"});

    for (size_t k = 0; k < outcomes.size(); ++k) {
      if (outcomes[k].status != InvokeOutcome::Status::Ok) {
        verdict.failures.push_back(
            {trial, tname, "status",
             "member " + std::to_string(k) + ": " + outcomes[k].message});
      } else if (outcomes[k].data != serial[k]) {
        verdict.failures.push_back(
            {trial, tname, "result-mismatch",
             "member " + std::to_string(k) +
                 " merged=" + truncated(outcomes[k].data.dump(), 2000) +
                 " serial=" + truncated(serial[k].dump(), 2000)});
      }
    }

    Snapshot live = eng.snapshot();
    Snapshot ref = clone->snapshot();
    if (live.digest != ref.digest) {
      verdict.failures.push_back(
          {trial, tname, "digest-mismatch",
           "merged=" + live.hex() + " serial=" + ref.hex() +
               "\nmerged dump:\n" + truncated(live.dump, 4000) +
               "\nserial dump:\n" + truncated(ref.dump, 4000)});
    }

    // A corrupted rewrite must be caught on its first trial; stopping early
    // keeps the mutation check cheap.
    if (mutate && !verdict.failures.empty()) break;
  }

  if (tpcc_svc) tpcc_svc->shutdown();
  if (shop_svc) shop_svc->shutdown();
  return verdict;
}

}  // namespace txmerge::harness
