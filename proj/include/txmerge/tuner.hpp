#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "txmerge/gpr.hpp"
#include "txmerge/service.hpp"

namespace txmerge {
class WireClient;
}

namespace txmerge::tuner {

struct TuneOptions {
  int wmax = 8;
  int bmax = 16;
  int window_ms = 500;
  uint64_t seed = 1;
  int init_samples = 20;
  int max_iterations = 25;
};

// One evaluated point, paired with the model's belief about it from just
// before the measurement was taken.
struct TuneStep {
  int iteration = 0;
  Config config;
  double throughput = 0.0;
  double predicted_mean = 0.0;
  double predicted_var = 0.0;
};

struct TuneResult {
  Config recommended;
  double predicted_best = 0.0;
  std::vector<TuneStep> trace;
  bool capped = false;

  // CSV rendering of the trace with a trailing comment line stating why
  // the search stopped.
  std::string trace_csv() const;
};

// Measures the objective at a configuration. Implementations are expected
// to be expensive; the search spends model time to save evaluator calls.
using Evaluator = std::function<double(const Config&)>;

// Bayesian optimization over the (workers, batch) grid: a seeded batch of
// distinct random probes, then expected-improvement steps under a Gaussian
// process surrogate. Stops once the recommendation and its predicted value
// hold still for two consecutive refits, or at the iteration cap.
TuneResult tune(const Evaluator& evaluate, const TuneOptions& opts);

// Evaluator that points the search at a live service over the wire: apply
// the candidate worker/batch settings on top of a base config, let the
// service run for window_ms, then read back its rolling throughput.
// The client must outlive the returned evaluator.
Evaluator wire_evaluator(WireClient& client, const ServiceConfig& base,
                         int window_ms);

}  // namespace txmerge::tuner
