#include "txmerge/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

#include "txmerge/client.hpp"
#include "txmerge/errors.hpp"

namespace txmerge::tuner {

namespace {

std::vector<Config> full_grid(int wmax, int bmax) {
  std::vector<Config> cells;
  cells.reserve(size_t(wmax) * bmax);
  for (int w = 1; w <= wmax; ++w) {
    for (int b = 1; b <= bmax; ++b) cells.push_back(Config{w, b});
  }
  return cells;
}

double best_throughput(const std::vector<Observation>& observations) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& obs : observations) best = std::max(best, obs.throughput);
  return best;
}

}  // namespace

std::string TuneResult::trace_csv() const {
  std::string out = "iteration,workers,batch,throughput,predicted_mean,predicted_var\n";
  char line[192];
  for (const TuneStep& step : trace) {
    std::snprintf(line, sizeof(line), "%d,%d,%d,%.6g,%.6g,%.6g\n",
                  step.iteration, step.config.workers, step.config.batch,
                  step.throughput, step.predicted_mean, step.predicted_var);
    out += line;
  }
  out += capped ? "# stopped=capped\n" : "# stopped=converged\n";
  return out;
}

TuneResult tune(const Evaluator& evaluate, const TuneOptions& opts) {
  if (opts.wmax < 1 || opts.bmax < 1) {
    raise(Errc::ValidationError, "tuning grid must be at least 1x1");
  }
  if (opts.init_samples < 1) {
    raise(Errc::ValidationError, "need at least one initial sample");
  }
  if (opts.max_iterations < 0) {
    raise(Errc::ValidationError, "iteration cap cannot be negative");
  }

  TuneResult result;
  std::vector<Observation> observations;
  int iteration = 0;

  // Each trace row carries the posterior from just before its measurement,
  // so the fit always runs first; with too little data that is the wide
  // constant prior of the degenerate model.
  auto measure = [&](const GprModel& model, const Config& config) {
    GprModel::Prediction pred = model.predict(config);
    double y = evaluate(config);
    observations.push_back(Observation{config, y});
    ++iteration;
    result.trace.push_back(
        TuneStep{iteration, config, y, pred.mean, pred.variance});
  };

  std::vector<Config> cells = full_grid(opts.wmax, opts.bmax);
  std::mt19937_64 rng(opts.seed);
  std::shuffle(cells.begin(), cells.end(), rng);
  size_t init_n = std::min(size_t(opts.init_samples), cells.size());
  for (size_t i = 0; i < init_n; ++i) {
    GprModel model = GprModel::fit(observations, opts.wmax, opts.bmax);
    measure(model, cells[i]);
  }

  GprModel model = GprModel::fit(observations, opts.wmax, opts.bmax);
  Config prev_recommended;
  double prev_best = 0.0;
  bool have_prev = false;
  int streak = 0;
  result.capped = true;

  for (int bo = 0; bo < opts.max_iterations; ++bo) {
    Config candidate = model.next_config(best_throughput(observations));
    measure(model, candidate);
    model = GprModel::fit(observations, opts.wmax, opts.bmax);

    Config recommended = model.argmax_mean();
    double predicted = model.predict(recommended).mean;
    if (have_prev && recommended == prev_recommended) {
      double rel = std::fabs(predicted - prev_best) /
                   std::max(std::fabs(prev_best), 1e-12);
      streak = rel < 0.01 ? streak + 1 : 0;
    } else {
      streak = 0;
    }
    prev_recommended = recommended;
    prev_best = predicted;
    have_prev = true;
    if (streak >= 2) {
      result.capped = false;
      break;
    }
  }

  result.recommended = model.argmax_mean();
  result.predicted_best = model.predict(result.recommended).mean;
  return result;
}

Evaluator wire_evaluator(WireClient& client, const ServiceConfig& base,
                         int window_ms) {
  return [&client, base, window_ms](const Config& config) {
    ServiceConfig cfg = base;
    cfg.workers = config.workers;
    cfg.batch_size = config.batch;
    client.set_config(cfg);
    std::this_thread::sleep_for(std::chrono::milliseconds(window_ms));
    nlohmann::json stats = client.get_stats();
    return stats.at("throughput_per_s").get<double>();
  };
}

}  // namespace txmerge::tuner
