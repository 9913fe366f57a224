#include "txmerge/gpr.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace txmerge::tuner {

namespace {

constexpr double kPi = 3.14159265358979323846;

double kernel(const std::array<double, 2>& a, const std::array<double, 2>& b,
              const GprHyper& h) {
  double dx = a[0] - b[0];
  double dy = a[1] - b[1];
  double sq = dx * dx + dy * dy;
  return h.signal_var * std::exp(-sq / (2.0 * h.length_scale * h.length_scale));
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

}  // namespace

std::vector<GprHyper> GprModel::hyper_grid() {
  std::vector<GprHyper> grid;
  const double signal_vars[] = {0.25, 1.0, 4.0};
  for (double sf : signal_vars) {
    for (int i = 0; i < 9; ++i) {
      double ell = std::pow(10.0, -1.0 + 2.0 * i / 8.0);
      for (int j = 0; j < 7; ++j) {
        double noise = std::pow(10.0, -4.0 + 4.0 * j / 6.0);
        grid.push_back(GprHyper{ell, sf, noise});
      }
    }
  }
  return grid;
}

std::array<double, 2> GprModel::scale_input(const Config& config) const {
  double w = wmax_ > 1 ? double(config.workers - 1) / double(wmax_ - 1) : 0.0;
  double b = bmax_ > 1 ? double(config.batch - 1) / double(bmax_ - 1) : 0.0;
  return {w, b};
}

GprModel GprModel::fit(const std::vector<Observation>& observations, int wmax,
                       int bmax) {
  GprModel m;
  m.wmax_ = wmax < 1 ? 1 : wmax;
  m.bmax_ = bmax < 1 ? 1 : bmax;

  const int n = int(observations.size());
  m.inputs_.reserve(observations.size());
  for (const auto& obs : observations) {
    m.inputs_.push_back(m.scale_input(obs.config));
  }

  double mean = 0.0;
  for (const auto& obs : observations) mean += obs.throughput;
  if (n > 0) mean /= n;
  double var = 0.0;
  for (const auto& obs : observations) {
    double d = obs.throughput - mean;
    var += d * d;
  }
  if (n > 0) var /= n;
  double stddev = std::sqrt(var);

  m.target_mean_ = mean;
  if (n < 2 || stddev < 1e-12) {
    // Not enough information for a fit: fall back to a constant model with
    // a deliberately wide variance so downstream search stays exploratory.
    m.degenerate_ = true;
    m.target_std_ = 1.0;
    m.targets_.reserve(observations.size());
    for (const auto& obs : observations) {
      m.targets_.push_back(obs.throughput - mean);
    }
    return m;
  }

  m.degenerate_ = false;
  m.target_std_ = stddev;
  m.targets_.reserve(observations.size());
  for (const auto& obs : observations) {
    m.targets_.push_back((obs.throughput - mean) / stddev);
  }

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = m.targets_[i];

  double best_lml = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_chol;
  Eigen::VectorXd best_alpha;

  for (const GprHyper& h : hyper_grid()) {
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        k(i, j) = kernel(m.inputs_[i], m.inputs_[j], h);
      }
      k(i, i) += h.noise_var;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd alpha = llt.solve(y);
    Eigen::MatrixXd lower = llt.matrixL();
    double log_det_half = 0.0;
    for (int i = 0; i < n; ++i) log_det_half += std::log(lower(i, i));
    double lml =
        -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * std::log(2.0 * kPi);
    if (lml > best_lml) {
      best_lml = lml;
      m.hyper_ = h;
      best_chol = lower;
      best_alpha = alpha;
    }
  }

  m.lml_ = best_lml;
  m.chol_.assign(size_t(n) * n, 0.0);
  m.alpha_.resize(n);
  for (int i = 0; i < n; ++i) {
    m.alpha_[i] = best_alpha(i);
    for (int j = 0; j <= i; ++j) m.chol_[size_t(i) * n + j] = best_chol(i, j);
  }
  return m;
}

GprModel::Prediction GprModel::predict_standardized(const Config& config) const {
  if (degenerate_) return {0.0, 1e6};

  const int n = int(inputs_.size());
  std::array<double, 2> x = scale_input(config);
  std::vector<double> kstar(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    kstar[i] = kernel(x, inputs_[i], hyper_);
    mean += kstar[i] * alpha_[i];
  }

  // Forward substitution: v = L^{-1} k*.
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    double s = kstar[i];
    for (int j = 0; j < i; ++j) s -= chol_[size_t(i) * n + j] * v[j];
    v[i] = s / chol_[size_t(i) * n + i];
  }
  double vv = 0.0;
  for (int i = 0; i < n; ++i) vv += v[i] * v[i];
  double variance = hyper_.signal_var - vv;
  if (variance < 0.0) variance = 0.0;
  return {mean, variance};
}

GprModel::Prediction GprModel::predict(const Config& config) const {
  Prediction p = predict_standardized(config);
  return {target_mean_ + target_std_ * p.mean,
          target_std_ * target_std_ * p.variance};
}

double GprModel::expected_improvement(const Config& config,
                                      double best_observed, double xi) const {
  double fbest = (best_observed - target_mean_) / target_std_;
  Prediction p = predict_standardized(config);
  double sigma = std::sqrt(p.variance);
  double gap = p.mean - fbest - xi;
  if (sigma < 1e-12) return gap > 0.0 ? gap : 0.0;
  double z = gap / sigma;
  return gap * norm_cdf(z) + sigma * norm_pdf(z);
}

Config GprModel::next_config(double best_observed, double xi) const {
  Config best{1, 1};
  double best_ei = -std::numeric_limits<double>::infinity();
  for (int w = 1; w <= wmax_; ++w) {
    for (int b = 1; b <= bmax_; ++b) {
      double ei = expected_improvement(Config{w, b}, best_observed, xi);
      if (ei > best_ei) {
        best_ei = ei;
        best = Config{w, b};
      }
    }
  }
  return best;
}

Config GprModel::argmax_mean() const {
  Config best{1, 1};
  double best_mean = -std::numeric_limits<double>::infinity();
  for (int w = 1; w <= wmax_; ++w) {
    for (int b = 1; b <= bmax_; ++b) {
      double mean = predict(Config{w, b}).mean;
      if (mean > best_mean) {
        best_mean = mean;
        best = Config{w, b};
      }
    }
  }
  return best;
}

}  // namespace txmerge::tuner
