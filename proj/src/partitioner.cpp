#include "txmerge/partitioner.hpp"

#include <atomic>

namespace txmerge {

int64_t PartitionKey::scalar() const {
  if (parts.empty()) return 0;
  const Value& v = parts[0];
  switch (v.type()) {
    case Value::Type::Integer: return v.as_integer();
    case Value::Type::Timestamp: return v.as_timestamp();
    case Value::Type::Decimal: return v.scaled_decimal();
    default: return static_cast<int64_t>(fold());
  }
}

uint64_t PartitionKey::fold() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const Value& v : parts) mix(v.to_sql());
  return h;
}

void validate_policy(const PartitionPolicy& policy) {
  int64_t prev_hi = INT64_MIN;
  std::vector<PartitionRule> sorted = policy.rules;
  std::sort(sorted.begin(), sorted.end(),
            [](const PartitionRule& a, const PartitionRule& b) { return a.lo < b.lo; });
  for (const PartitionRule& r : sorted) {
    if (r.lo >= r.hi)
      raise(Errc::ValidationError, "partition rule with empty range");
    if (r.lo < prev_hi)
      raise(Errc::ValidationError, "partition rules overlap");
    if (r.target < 0)
      raise(Errc::ValidationError, "partition rule with negative target");
    prev_hi = r.hi;
  }
  if (policy.fallback < 0)
    raise(Errc::ValidationError, "negative fallback target");
}

nlohmann::json PartitionPolicy::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const PartitionRule& r : rules)
    rj.push_back({{"lo", r.lo}, {"hi", r.hi}, {"target", r.target}});
  return nlohmann::json{{"version", version}, {"rules", std::move(rj)},
                        {"fallback", fallback}};
}

PartitionPolicy PartitionPolicy::from_json(const nlohmann::json& j) {
  PartitionPolicy p;
  p.version = j.at("version").get<uint64_t>();
  p.fallback = j.value("fallback", 0);
  if (j.contains("rules"))
    for (const nlohmann::json& rj : j["rules"]) {
      PartitionRule r;
      r.lo = rj.at("lo").get<int64_t>();
      r.hi = rj.at("hi").get<int64_t>();
      r.target = rj.at("target").get<int>();
      p.rules.push_back(r);
    }
  validate_policy(p);
  return p;
}

Partitioner::Partitioner() : policy_(std::make_shared<const PartitionPolicy>()) {}

Partitioner::Partitioner(PartitionPolicy initial) {
  validate_policy(initial);
  policy_ = std::make_shared<const PartitionPolicy>(std::move(initial));
}

RouteResult Partitioner::route(const PartitionKey& key, int worker_count) const {
  std::shared_ptr<const PartitionPolicy> p = std::atomic_load(&policy_);
  RouteResult out;
  int64_t s = key.scalar();
  bool matched = false;
  for (const PartitionRule& r : p->rules) {
    if (s >= r.lo && s < r.hi) {
      out.target = r.target;
      matched = true;
      break;
    }
  }
  if (!matched) {
    out.target = p->fallback;
    out.used_fallback = true;
  }
  if (worker_count > 0 && out.target >= worker_count) {
    out.target = static_cast<int>(key.fold() % static_cast<uint64_t>(worker_count));
    out.out_of_range = true;
  }
  return out;
}

void Partitioner::update(PartitionPolicy next) {
  validate_policy(next);
  std::lock_guard guard(swap_mtx_);
  std::shared_ptr<const PartitionPolicy> cur = std::atomic_load(&policy_);
  if (next.version <= cur->version)
    raise(Errc::StaleVersion,
          "policy version " + std::to_string(next.version) +
              " is not newer than " + std::to_string(cur->version));
  std::atomic_store(&policy_,
                    std::shared_ptr<const PartitionPolicy>(
                        std::make_shared<const PartitionPolicy>(std::move(next))));
}

uint64_t Partitioner::version() const {
  return std::atomic_load(&policy_)->version;
}

PartitionPolicy Partitioner::policy() const {
  return *std::atomic_load(&policy_);
}

}  // namespace txmerge
