#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace txmerge::tuner {

// A point in the two-dimensional tuning space: worker count and batch size.
struct Config {
  int workers = 1;
  int batch = 1;

  bool operator==(const Config& other) const {
    return workers == other.workers && batch == other.batch;
  }
  bool operator!=(const Config& other) const { return !(*this == other); }
};

// One measured sample: a configuration and the throughput it achieved.
struct Observation {
  Config config;
  double throughput = 0.0;
};

// Hyperparameters of the squared-exponential kernel with additive white
// noise. One shared length scale covers both input dimensions because the
// inputs are rescaled to [0, 1] before fitting.
struct GprHyper {
  double length_scale = 1.0;
  double signal_var = 1.0;
  double noise_var = 0.01;
};

// Gaussian process regression over the (workers, batch) grid.
//
// fit() rescales inputs to the unit square, standardizes targets, and picks
// hyperparameters by exhaustive grid search on the log marginal likelihood.
// Predictions come back in the original throughput units. All linear algebra
// runs through a Cholesky factorization of the regularized kernel matrix;
// the noise floor of the hyperparameter grid keeps that factorization well
// conditioned without extra jitter.
//
// Fewer than two observations, or a target column with no spread, cannot
// support a fit; the model then degenerates to a constant mean with a wide
// variance rather than failing, and reports the condition via degenerate().
class GprModel {
 public:
  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  static GprModel fit(const std::vector<Observation>& observations, int wmax,
                      int bmax);

  // Posterior predictive mean and latent variance at a configuration,
  // in original throughput units.
  Prediction predict(const Config& config) const;

  // Expected improvement over the given incumbent (original units),
  // computed in standardized target space with exploration margin xi.
  double expected_improvement(const Config& config, double best_observed,
                              double xi = 0.01) const;

  // Configuration maximizing expected improvement over the full grid.
  // Ties break toward the lexicographically smallest (workers, batch).
  Config next_config(double best_observed, double xi = 0.01) const;

  // Configuration maximizing the posterior mean over the full grid,
  // with the same tie break.
  Config argmax_mean() const;

  bool degenerate() const { return degenerate_; }
  const GprHyper& hyper() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }

  // Introspection used to cross-check the numerics from the outside.
  const std::vector<std::array<double, 2>>& scaled_inputs() const {
    return inputs_;
  }
  const std::vector<double>& standardized_targets() const { return targets_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  Prediction predict_standardized(const Config& config) const;

  // The hyperparameter candidates fit() enumerates, in enumeration order.
  static std::vector<GprHyper> hyper_grid();

 private:
  GprModel() = default;

  std::array<double, 2> scale_input(const Config& config) const;

  int wmax_ = 1;
  int bmax_ = 1;
  bool degenerate_ = true;
  GprHyper hyper_;
  double lml_ = 0.0;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  std::vector<std::array<double, 2>> inputs_;
  std::vector<double> targets_;
  // Cholesky factor of K + noise*I (row major, lower triangle) and the
  // precomputed alpha = (K + noise*I)^{-1} y, both in standardized space.
  std::vector<double> chol_;
  std::vector<double> alpha_;
};

}  // namespace txmerge::tuner
