#include "txmerge/service.hpp"

#include <algorithm>
#include <set>

namespace txmerge {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json ServiceConfig::to_json() const {
  json j{{"workers", workers},
         {"batch_size", batch_size},
         {"batch_timeout_ms", batch_timeout.count()},
         {"queue_capacity", queue_capacity},
         {"merge_default", merge_default}};
  json overrides = json::object();
  for (const auto& [name, on] : merge_enabled) overrides[name] = on;
  j["merge_enabled"] = overrides;
  return j;
}

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig cfg;
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("batch_timeout_ms"))
    cfg.batch_timeout = std::chrono::milliseconds(j["batch_timeout_ms"].get<int64_t>());
  if (j.contains("queue_capacity"))
    cfg.queue_capacity = j["queue_capacity"].get<size_t>();
  if (j.contains("merge_default")) cfg.merge_default = j["merge_default"].get<bool>();
  if (j.contains("merge_enabled"))
    for (const auto& [name, on] : j["merge_enabled"].items())
      cfg.merge_enabled[name] = on.get<bool>();
  validate_config(cfg);
  return cfg;
}

void validate_config(const ServiceConfig& cfg) {
  if (cfg.workers < 1) raise(Errc::ValidationError, "worker count must be >= 1");
  if (cfg.batch_size < 1) raise(Errc::ValidationError, "batch size must be >= 1");
  if (cfg.batch_timeout.count() <= 0)
    raise(Errc::ValidationError, "batch timeout must be positive");
  if (cfg.queue_capacity < 1)
    raise(Errc::ValidationError, "queue capacity must be >= 1");
}

json ServiceStats::to_json() const {
  return json{{"completed", completed},
              {"retried", retried},
              {"errors", errors},
              {"batches", batches},
              {"merged_batches", merged_batches},
              {"merge_fallbacks", merge_fallbacks},
              {"queue_rejects", queue_rejects},
              {"fallback_routes", fallback_routes},
              {"out_of_range_routes", out_of_range_routes},
              {"mean_batch_size", mean_batch_size},
              {"throughput_per_s", throughput_per_s},
              {"p50_ms", p50_ms},
              {"p95_ms", p95_ms},
              {"p99_ms", p99_ms}};
}

MergerService::MergerService(Engine& engine, ServiceConfig cfg)
    : engine_(engine) {
  validate_config(cfg);
  std::atomic_store(&cfg_, std::make_shared<const ServiceConfig>(cfg));
  std::lock_guard guard(workers_mtx_);
  resize_workers(cfg.workers);
}

MergerService::~MergerService() { shutdown(); }

void MergerService::register_template(TemplateExec exec) {
  if (exec.name.empty()) raise(Errc::ValidationError, "unnamed template");
  if (!exec.key_of || !exec.original || !exec.merged)
    raise(Errc::ValidationError, "template executor is missing a handler");
  std::lock_guard guard(reg_mtx_);
  templates_[exec.name] = std::move(exec);
}

void MergerService::finish(Pending& p, InvokeOutcome outcome) {
  {
    std::lock_guard guard(stats_mtx_);
    switch (outcome.status) {
      case InvokeOutcome::Status::Ok: ++counters_.completed; break;
      case InvokeOutcome::Status::Retry: ++counters_.retried; break;
      case InvokeOutcome::Status::Error: ++counters_.errors; break;
    }
    if (outcome.status == InvokeOutcome::Status::Ok) {
      double ms = std::chrono::duration<double, std::milli>(Clock::now() -
                                                            p.enqueued)
                      .count();
      latency_.record(ms);
      throughput_.record(1);
    }
  }
  if (p.done) p.done(std::move(outcome));
  p.done = nullptr;
}

void MergerService::submit(const std::string& txn, json args,
                           std::function<void(InvokeOutcome)> done) {
  Pending p;
  p.txn = txn;
  p.args = std::move(args);
  p.done = std::move(done);
  p.enqueued = Clock::now();

  std::function<PartitionKey(const json&)> key_of;
  {
    std::lock_guard guard(reg_mtx_);
    auto it = templates_.find(txn);
    if (it == templates_.end()) {
      finish(p, InvokeOutcome::error("UnknownTransaction: " + txn));
      return;
    }
    key_of = it->second.key_of;
  }

  PartitionKey key;
  try {
    key = key_of(p.args);
  } catch (const std::exception& e) {
    finish(p, InvokeOutcome::error(std::string("bad arguments: ") + e.what()));
    return;
  }
  p.key = key.parts;

  std::lock_guard layout(workers_mtx_);
  if (shutdown_) {
    finish(p, InvokeOutcome::retry("service shutting down"));
    return;
  }
  RouteResult route =
      partitioner_.route(key, static_cast<int>(workers_.size()));
  {
    std::lock_guard guard(stats_mtx_);
    if (route.used_fallback) ++counters_.fallback_routes;
    if (route.out_of_range) ++counters_.out_of_range_routes;
  }
  auto cfg = std::atomic_load(&cfg_);
  Worker* w = workers_[static_cast<size_t>(route.target)].get();
  {
    std::lock_guard guard(w->mtx);
    if (w->queue.size() >= cfg->queue_capacity) {
      std::lock_guard sg(stats_mtx_);
      ++counters_.queue_rejects;
      // fall through to the error below, outside w->mtx
    } else {
      w->queue.push_back(std::move(p));
      w->cv.notify_one();
      return;
    }
  }
  finish(p, InvokeOutcome::error("QueueFull: worker backlog at capacity"));
}

std::future<InvokeOutcome> MergerService::submit(const std::string& txn,
                                                 json args) {
  auto promise = std::make_shared<std::promise<InvokeOutcome>>();
  std::future<InvokeOutcome> fut = promise->get_future();
  submit(txn, std::move(args),
         [promise](InvokeOutcome o) { promise->set_value(std::move(o)); });
  return fut;
}

InvokeOutcome MergerService::invoke(const std::string& txn, json args) {
  return submit(txn, std::move(args)).get();
}

void MergerService::worker_loop(Worker* w) {
  for (;;) {
    std::vector<Pending> batch;
    std::shared_ptr<const ServiceConfig> cfg;
    {
      std::unique_lock lk(w->mtx);
      w->cv.wait(lk, [&] { return w->stop || !w->queue.empty(); });
      if (w->stop) return;  // leftovers are re-routed by the resizer

      // The queue head opens the batch and defines its merge key; the batch
      // closes at size B or when the head has waited the full timeout.
      cfg = std::atomic_load(&cfg_);
      const std::string txn = w->queue.front().txn;
      const KeyTuple key = w->queue.front().key;
      auto deadline = w->queue.front().enqueued + cfg->batch_timeout;
      auto matching = [&] {
        size_t n = 0;
        for (const Pending& p : w->queue)
          if (p.txn == txn && p.key == key) ++n;
        return n;
      };
      while (matching() < static_cast<size_t>(cfg->batch_size) &&
             Clock::now() < deadline && !w->stop)
        w->cv.wait_until(lk, deadline);
      if (w->stop) return;

      size_t want = std::min(matching(), static_cast<size_t>(cfg->batch_size));
      for (auto it = w->queue.begin();
           it != w->queue.end() && batch.size() < want;) {
        if (it->txn == txn && it->key == key) {
          batch.push_back(std::move(*it));
          it = w->queue.erase(it);
        } else {
          ++it;
        }
      }
    }
    execute_batch(std::move(batch), *cfg);
  }
}

void MergerService::run_members_alone(std::vector<Pending>& batch,
                                      std::vector<InvokeOutcome>& out) {
  TemplateExec exec;
  {
    std::lock_guard guard(reg_mtx_);
    exec = templates_.at(batch.front().txn);
  }
  for (size_t i = 0; i < batch.size(); ++i) {
    TxnId t = 0;
    try {
      t = engine_.begin();
      ExecSession sess(engine_, t);
      json result = exec.original(sess, batch[i].args);
      engine_.commit(t);
      out[i] = InvokeOutcome::ok(std::move(result));
      std::lock_guard guard(stats_mtx_);
      ++counters_.batches;
      ++batch_members_;
    } catch (const Error& e) {
      if (e.code() != Errc::Retryable) {
        try { engine_.abort(t); } catch (const Error&) {}
        out[i] = InvokeOutcome::error(e.what());
      } else {
        out[i] = InvokeOutcome::retry(e.what());
      }
    } catch (const std::exception& e) {
      try { engine_.abort(t); } catch (const Error&) {}
      out[i] = InvokeOutcome::error(std::string("executor failure: ") + e.what());
    }
  }
}

void MergerService::execute_batch(std::vector<Pending> batch,
                                  const ServiceConfig& cfg) {
  const size_t n = batch.size();
  const std::string& txn_name = batch.front().txn;
  TemplateExec exec;
  {
    std::lock_guard guard(reg_mtx_);
    exec = templates_.at(txn_name);
  }

  std::function<void(const MergedPlan&)> observer;
  {
    std::lock_guard guard(plan_mtx_);
    observer = plan_observer_;
  }

  std::vector<InvokeOutcome> outcomes(n);

  if (!cfg.merges(txn_name)) {
    // Pass-through: one backend transaction per invocation.
    run_members_alone(batch, outcomes);
    for (size_t i = 0; i < n; ++i) finish(batch[i], std::move(outcomes[i]));
    return;
  }

  // Sequential sub-batches: invocations whose plainly-set rows collide are
  // pushed into a later sub-batch so each merged call sees distinct rows.
  std::vector<std::vector<size_t>> subs;
  {
    std::vector<std::vector<KeyTuple>> keys(n);
    if (exec.collision_keys)
      for (size_t i = 0; i < n; ++i) keys[i] = exec.collision_keys(batch[i].args);
    std::vector<size_t> rest(n);
    for (size_t i = 0; i < n; ++i) rest[i] = i;
    while (!rest.empty()) {
      std::vector<size_t> sub, next;
      std::set<KeyTuple> used;
      for (size_t i : rest) {
        bool clash = std::any_of(keys[i].begin(), keys[i].end(),
                                 [&](const KeyTuple& k) { return used.count(k); });
        if (clash) {
          next.push_back(i);
        } else {
          sub.push_back(i);
          used.insert(keys[i].begin(), keys[i].end());
        }
      }
      subs.push_back(std::move(sub));
      rest = std::move(next);
    }
  }

  bool committed = false;
  std::string failure;
  bool retryable = false;
  MergedPlan captured;
  TxnId t = 0;
  try {
    t = engine_.begin();
    ExecSession sess(engine_, t, observer != nullptr);
    sess.plan().transaction = txn_name;
    for (size_t i = 0; i < n; ++i)
      sess.plan().invocations.push_back(static_cast<int>(i));

    for (const std::vector<size_t>& sub : subs) {
      if (sub.size() > 1) {
        std::vector<json> args;
        args.reserve(sub.size());
        for (size_t i : sub) args.push_back(batch[i].args);
        std::vector<json> results = exec.merged(sess, args);
        if (results.size() != sub.size())
          raise(Errc::InternalError, "merged executor returned " +
                                         std::to_string(results.size()) +
                                         " results for " +
                                         std::to_string(sub.size()) + " members");
        for (size_t k = 0; k < sub.size(); ++k)
          outcomes[sub[k]] = InvokeOutcome::ok(std::move(results[k]));
      } else {
        outcomes[sub[0]] =
            InvokeOutcome::ok(exec.original(sess, batch[sub[0]].args));
      }
    }
    engine_.commit(t);
    committed = true;
    if (observer) captured = sess.plan();
  } catch (const Error& e) {
    failure = e.what();
    retryable = e.code() == Errc::Retryable;
    if (!retryable) {
      try { engine_.abort(t); } catch (const Error&) {}
    }
  } catch (const std::exception& e) {
    failure = std::string("executor failure: ") + e.what();
    try { engine_.abort(t); } catch (const Error&) {}
  }

  if (committed) {
    {
      std::lock_guard guard(stats_mtx_);
      ++counters_.batches;
      batch_members_ += n;
      if (n >= 2) ++counters_.merged_batches;
    }
    for (size_t i = 0; i < n; ++i) finish(batch[i], std::move(outcomes[i]));
    if (observer) observer(captured);
    return;
  }

  if (retryable) {
    // The backend rolled everything back; members resubmit and the batch
    // re-forms, so the service itself never re-executes.
    for (Pending& p : batch)
      finish(p, InvokeOutcome::retry(failure));
    return;
  }

  // Logic failure inside the merged path: isolate it by running every
  // member alone so only the offending invocation carries the error.
  {
    std::lock_guard guard(stats_mtx_);
    ++counters_.merge_fallbacks;
  }
  run_members_alone(batch, outcomes);
  for (size_t i = 0; i < n; ++i) finish(batch[i], std::move(outcomes[i]));
}

void MergerService::resize_workers(int target) {
  // Caller holds workers_mtx_.
  while (static_cast<int>(workers_.size()) > target) {
    std::unique_ptr<Worker> w = std::move(workers_.back());
    workers_.pop_back();
    {
      std::lock_guard guard(w->mtx);
      w->stop = true;
      w->cv.notify_all();
    }
    if (w->thread.joinable()) w->thread.join();
    // Re-route whatever the worker left behind; capacity is waived because
    // this work was already accepted.
    for (Pending& p : w->queue) {
      if (workers_.empty() || shutdown_) {
        finish(p, InvokeOutcome::retry("service shutting down"));
        continue;
      }
      RouteResult route = partitioner_.route(PartitionKey{p.key},
                                             static_cast<int>(workers_.size()));
      Worker* dest = workers_[static_cast<size_t>(route.target)].get();
      std::lock_guard guard(dest->mtx);
      dest->queue.push_back(std::move(p));
      dest->cv.notify_one();
    }
  }
  while (static_cast<int>(workers_.size()) < target) {
    auto w = std::make_unique<Worker>();
    w->thread = std::thread(&MergerService::worker_loop, this, w.get());
    workers_.push_back(std::move(w));
  }
}

void MergerService::set_config(ServiceConfig cfg) {
  validate_config(cfg);
  std::lock_guard guard(workers_mtx_);
  if (shutdown_) raise(Errc::InvalidState, "service is shut down");
  std::atomic_store(&cfg_, std::make_shared<const ServiceConfig>(cfg));
  resize_workers(cfg.workers);
  // Wake everyone so waiting batch closers re-read the new config's
  // deadline at their next batch.
  for (auto& w : workers_) {
    std::lock_guard g(w->mtx);
    w->cv.notify_all();
  }
}

ServiceConfig MergerService::config() const {
  return *std::atomic_load(&cfg_);
}

void MergerService::set_policy(PartitionPolicy policy) {
  partitioner_.update(std::move(policy));
}

PartitionPolicy MergerService::policy() const { return partitioner_.policy(); }

ServiceStats MergerService::stats() const {
  std::lock_guard guard(stats_mtx_);
  ServiceStats s = counters_;
  s.mean_batch_size =
      s.batches == 0
          ? 0.0
          : static_cast<double>(batch_members_) / static_cast<double>(s.batches);
  s.throughput_per_s = throughput_.per_second();
  s.p50_ms = latency_.percentile(50);
  s.p95_ms = latency_.percentile(95);
  s.p99_ms = latency_.percentile(99);
  return s;
}

void MergerService::reset_stats() {
  std::lock_guard guard(stats_mtx_);
  counters_ = ServiceStats{};
  batch_members_ = 0;
  latency_.reset();
  throughput_.reset();
}

void MergerService::set_plan_observer(
    std::function<void(const MergedPlan&)> obs) {
  std::lock_guard guard(plan_mtx_);
  plan_observer_ = std::move(obs);
}

void MergerService::shutdown() {
  std::lock_guard guard(workers_mtx_);
  if (shutdown_) return;
  shutdown_ = true;
  resize_workers(0);
}

}  // namespace txmerge
