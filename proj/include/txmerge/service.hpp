#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "txmerge/exec.hpp"
#include "txmerge/metrics.hpp"
#include "txmerge/partitioner.hpp"

namespace txmerge {

// Batching middleware.  Invocations are routed to per-worker queues by
// partition key; each worker drains same-key batches, executes them as one
// backend transaction through the registered executor, and answers every
// member exactly once.  The service holds no durable state: everything an
// invocation changes lives in the backend, so instances can be killed and
// replaced freely.

struct ServiceConfig {
  int workers = 2;
  int batch_size = 4;
  std::chrono::milliseconds batch_timeout{5};
  size_t queue_capacity = 1024;
  bool merge_default = true;                 // merge unless switched off
  std::map<std::string, bool> merge_enabled; // per-template override

  bool merges(const std::string& txn) const {
    auto it = merge_enabled.find(txn);
    return it == merge_enabled.end() ? merge_default : it->second;
  }

  nlohmann::json to_json() const;
  static ServiceConfig from_json(const nlohmann::json& j);
};

void validate_config(const ServiceConfig& cfg);  // ValidationError

struct InvokeOutcome {
  enum class Status { Ok, Retry, Error };

  Status status = Status::Ok;
  nlohmann::json data;   // Ok: executor result payload
  std::string message;   // Retry / Error reason

  static InvokeOutcome ok(nlohmann::json d) {
    return {Status::Ok, std::move(d), ""};
  }
  static InvokeOutcome retry(std::string why) {
    return {Status::Retry, nullptr, std::move(why)};
  }
  static InvokeOutcome error(std::string why) {
    return {Status::Error, nullptr, std::move(why)};
  }
};

// What a workload contributes per transaction type.  `original` runs one
// invocation; `merged` runs a whole batch and returns one payload per slot.
// `collision_keys` lists rows an invocation updates in a way that cannot
// merge with a second update of the same row (plain SET); batches are split
// into sequential sub-batches so no two members of one merged call collide.
// Deferring a collider preserves serial order only when those writes are
// the sole cross-member conflict; templates whose reads overlap the
// collision rows must not declare collision keys and instead reject or
// aggregate duplicates inside `merged`.
struct TemplateExec {
  std::string name;
  std::function<PartitionKey(const nlohmann::json& args)> key_of;
  std::function<std::vector<KeyTuple>(const nlohmann::json& args)> collision_keys;
  std::function<nlohmann::json(ExecSession&, const nlohmann::json& args)> original;
  std::function<std::vector<nlohmann::json>(
      ExecSession&, const std::vector<nlohmann::json>& args)> merged;
};

struct ServiceStats {
  uint64_t completed = 0;
  uint64_t retried = 0;        // Retry statuses handed out
  uint64_t errors = 0;
  uint64_t batches = 0;        // batches executed, singletons included
  uint64_t merged_batches = 0; // batches of size >= 2
  uint64_t merge_fallbacks = 0;  // merged path failed, members re-run alone
  uint64_t queue_rejects = 0;
  uint64_t fallback_routes = 0;
  uint64_t out_of_range_routes = 0;
  double mean_batch_size = 0.0;
  double throughput_per_s = 0.0;
  double p50_ms = 0.0, p95_ms = 0.0, p99_ms = 0.0;

  nlohmann::json to_json() const;
};

class MergerService {
 public:
  MergerService(Engine& engine, ServiceConfig cfg);
  ~MergerService();

  MergerService(const MergerService&) = delete;
  MergerService& operator=(const MergerService&) = delete;

  void register_template(TemplateExec exec);

  // Async submission; the callback fires exactly once, from a worker thread.
  void submit(const std::string& txn, nlohmann::json args,
              std::function<void(InvokeOutcome)> done);
  std::future<InvokeOutcome> submit(const std::string& txn,
                                    nlohmann::json args);
  InvokeOutcome invoke(const std::string& txn, nlohmann::json args);

  // Takes effect at batch boundaries; in-flight batches finish on the old
  // config.  Worker-count changes re-route any queued work.
  void set_config(ServiceConfig cfg);
  ServiceConfig config() const;

  void set_policy(PartitionPolicy policy);  // StaleVersion on old versions
  PartitionPolicy policy() const;

  ServiceStats stats() const;
  void reset_stats();

  // Test hook: observes the captured plan of every merged batch.
  void set_plan_observer(std::function<void(const MergedPlan&)> obs);

  void shutdown();

 private:
  struct Pending {
    std::string txn;
    nlohmann::json args;
    KeyTuple key;
    std::function<void(InvokeOutcome)> done;
    std::chrono::steady_clock::time_point enqueued;
  };

  struct Worker {
    std::mutex mtx;
    std::condition_variable cv;
    std::deque<Pending> queue;
    std::thread thread;
    bool stop = false;
  };

  void worker_loop(Worker* w);
  void execute_batch(std::vector<Pending> batch, const ServiceConfig& cfg);
  void run_members_alone(std::vector<Pending>& batch,
                         std::vector<InvokeOutcome>& out);
  void resize_workers(int target);
  void finish(Pending& p, InvokeOutcome outcome);

  Engine& engine_;
  std::shared_ptr<const ServiceConfig> cfg_;
  Partitioner partitioner_;

  mutable std::mutex workers_mtx_;   // guards workers_ layout, not queues
  std::vector<std::unique_ptr<Worker>> workers_;
  bool shutdown_ = false;

  mutable std::mutex reg_mtx_;
  std::map<std::string, TemplateExec> templates_;

  std::function<void(const MergedPlan&)> plan_observer_;
  mutable std::mutex plan_mtx_;

  // stats
  mutable std::mutex stats_mtx_;
  ServiceStats counters_;
  uint64_t batch_members_ = 0;
  LatencyRecorder latency_;
  ThroughputWindow throughput_;
};

}  // namespace txmerge
