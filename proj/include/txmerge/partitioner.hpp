#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"
#include "txmerge/value.hpp"

namespace txmerge {

// Routing key extracted from invocation arguments.  Range rules match on
// the scalar of the first component; non-integer components fold through a
// hash so text keys still route deterministically.
struct PartitionKey {
  KeyTuple parts;

  int64_t scalar() const;
  uint64_t fold() const;
};

struct PartitionRule {
  int64_t lo = 0;  // inclusive
  int64_t hi = 0;  // exclusive
  int target = 0;
};

struct PartitionPolicy {
  uint64_t version = 0;
  std::vector<PartitionRule> rules;
  int fallback = 0;

  nlohmann::json to_json() const;
  static PartitionPolicy from_json(const nlohmann::json& j);
};

struct RouteResult {
  int target = 0;
  bool used_fallback = false;      // no rule matched, policy fallback applied
  bool out_of_range = false;       // target exceeded worker count, hash-spread
};

// Versioned range router.  Updates swap the policy atomically and must be
// version-monotone (StaleVersion otherwise), so racing reconfigurations
// converge on the newest policy; reads never block.  Routing is total:
// rule miss falls back to the policy's fallback target, and a target
// beyond the current worker count spreads by key hash; both escapes are
// flagged on the result so operators can see a policy mismatch.
class Partitioner {
 public:
  Partitioner();
  explicit Partitioner(PartitionPolicy initial);

  RouteResult route(const PartitionKey& key, int worker_count) const;
  void update(PartitionPolicy next);  // StaleVersion, ValidationError
  uint64_t version() const;
  PartitionPolicy policy() const;

 private:
  std::shared_ptr<const PartitionPolicy> policy_;
  mutable std::mutex swap_mtx_;  // guards update ordering, not reads
};

void validate_policy(const PartitionPolicy& policy);

}  // namespace txmerge
