#pragma once

// Pieces shared by the isoelastic sampler and the latent-mixture sampler.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "ergo/likelihood.hpp"

namespace ergo::detail {

inline double normal_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - 0.5 * z * z;
}

/// Sum of normal log densities from sufficient statistics.
inline double normal_loglik_sum(double n, double s1, double s2, double mu, double sigma) {
  const double ss = s2 - 2.0 * mu * s1 + n * mu * mu;
  return -n * std::log(sigma) - 0.5 * ss / (sigma * sigma);
}

/// Gaussian random-walk block with burn-in scale adaptation.
class RandomWalk {
 public:
  RandomWalk(double scale = 0.1) : scale_(scale) {}

  double propose(double x, std::mt19937_64& rng) {
    return x + scale_ * normal_(rng);
  }

  /// Metropolis test on a log acceptance ratio; NaN and -inf reject.
  bool accept(double log_ratio, std::mt19937_64& rng) {
    ++window_prop_;
    ++prop_;
    const bool ok = log_ratio >= 0.0 || (log_ratio > -1e300 && std::log(unif_(rng)) < log_ratio);
    if (ok) {
      ++window_acc_;
      ++acc_;
    }
    return ok;
  }

  /// Out-of-support proposals count as rejections.
  void reject() {
    ++window_prop_;
    ++prop_;
  }

  /// Pushes the window acceptance toward ~35%, inside the 20-50% band.
  void adapt() {
    if (window_prop_ == 0) return;
    const double rate = static_cast<double>(window_acc_) / window_prop_;
    scale_ *= std::exp(2.0 * (rate - 0.35));
    scale_ = std::clamp(scale_, 1e-5, 50.0);
    window_acc_ = window_prop_ = 0;
  }

  void reset_counts() { acc_ = prop_ = window_acc_ = window_prop_ = 0; }
  double rate() const { return prop_ ? static_cast<double>(acc_) / prop_ : 0.0; }
  long proposals() const { return prop_; }
  long accepted() const { return acc_; }
  double scale() const { return scale_; }

 private:
  double scale_;
  long acc_ = 0, prop_ = 0, window_acc_ = 0, window_prop_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

inline constexpr int kAdaptWindow = 50;

/// Compiled condition with per-pair utility differences cached, so that
/// sensitivity updates cost one pass over the pairs.
class ConditionEval {
 public:
  explicit ConditionEval(CompiledCondition c) : c_(std::move(c)) {
    n_left_.reserve(c_.pairs.size());
    n_right_.reserve(c_.pairs.size());
    for (const auto& p : c_.pairs) {
      n_left_.push_back(p.n_left);
      n_right_.push_back(p.n_right);
    }
  }

  const CompiledCondition& data() const { return c_; }
  std::size_t n_stimuli() const { return c_.stimuli.size(); }
  std::size_t n_pairs() const { return c_.pairs.size(); }
  bool empty() const { return c_.empty(); }

  void differences(std::span<const double> du, std::vector<double>& d) const {
    d.resize(c_.pairs.size());
    for (std::size_t k = 0; k < c_.pairs.size(); ++k) {
      const auto& s = c_.pairs[k].stim;
      d[k] = 0.5 * (du[s[0]] + du[s[1]]) - 0.5 * (du[s[2]] + du[s[3]]);
    }
  }

  double loglik(const std::vector<double>& d, double beta) const {
    static const double lo = std::log(kThetaFloor);
    static const double hi = std::log1p(-kThetaFloor);
    double ll = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double x = beta * d[k];
      // log sigmoid(x) and log sigmoid(-x) share one exp/log1p.
      const double a = std::abs(x);
      const double l1 = std::log1p(std::exp(-a));
      double lp = x >= 0.0 ? -l1 : x - l1;   // log theta
      double lq = x >= 0.0 ? -x - l1 : -l1;  // log (1 - theta)
      lp = std::clamp(lp, lo, hi);
      lq = std::clamp(lq, lo, hi);
      ll += n_left_[k] * lp + n_right_[k] * lq;
    }
    return ll;
  }

 private:
  CompiledCondition c_;
  std::vector<double> n_left_, n_right_;
};

}  // namespace ergo::detail
