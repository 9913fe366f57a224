#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>

#include "json.hpp"
#include "txmerge/partitioner.hpp"
#include "txmerge/service.hpp"

namespace txmerge {

// Synchronous wire client: one outstanding request per call, matched by id.
// Retry handling lives here, not in the service: a retry response means the
// batch aborted and rolled back, so the client backs off with jitter and
// resubmits the identical invocation.
class WireClient {
 public:
  WireClient(const std::string& host, uint16_t port);  // ServiceUnreachable
  ~WireClient();

  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  nlohmann::json call(const std::string& method, nlohmann::json params);

  InvokeOutcome invoke(const std::string& txn, nlohmann::json args);
  // Resubmits on Retry up to max_attempts; returns the last outcome.
  // attempts_out (optional) receives the number of submissions made.
  InvokeOutcome invoke_with_retry(const std::string& txn, nlohmann::json args,
                                  int max_attempts = 8,
                                  int* attempts_out = nullptr);

  void set_config(const ServiceConfig& cfg);
  void set_policy(const PartitionPolicy& policy);
  nlohmann::json get_stats();
  bool health();

  void reseed(uint64_t seed);  // deterministic backoff jitter for tests

 private:
  std::mutex mtx_;
  int fd_ = -1;
  int64_t next_id_ = 1;
  std::mt19937_64 rng_;
};

}  // namespace txmerge
