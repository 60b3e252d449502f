#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ergo/dataset.hpp"

namespace ergo {

// ---- choice proportions on discrepant trials ------------------------------

struct ChoiceProportion {
  std::string subject;
  Dynamic condition = Dynamic::Additive;
  /// Fraction of answered discrepant trials decided in favour of log utility;
  /// empty when there are none.
  std::optional<double> cp_log;
  int n_discrepant = 0;  // discrepant trials in the session's schedule
  int n_answered = 0;    // of those, not timed out
  int n_log = 0;
};

/// Discrepant trials are classified at the condition's fixed wealth.
ChoiceProportion choice_proportion_log(const SubjectDataset& data, Dynamic condition);

// ---- default Bayes factor t-test -------------------------------------------

inline constexpr double kDefaultCauchyScale = 0.70710678118654752440;

enum class Alternative { TwoSided, Greater, Less };

std::string to_string(Alternative a);

struct BayesFactorResult {
  double bf = 1.0;  // alternative vs point null
  Alternative side = Alternative::TwoSided;
  double prior_scale = kDefaultCauchyScale;
  double t = 0.0;
  int n = 0;
  double posterior_median = 0.0;  // effect size delta
  double lo95 = 0.0;
  double hi95 = 0.0;

  double bf01() const { return 1.0 / bf; }
};

/// Bayes factor from a one-sample t statistic: Cauchy(0, scale) prior on the
/// standardized effect, truncated to one half-line for directional tests.
double jzs_bf_from_t(double t, int n, Alternative side = Alternative::TwoSided,
                     double scale = kDefaultCauchyScale);

/// One-sample test of mean(samples) against null_value.
BayesFactorResult jzs_bf_ttest(std::span<const double> samples, double null_value = 0.0,
                               Alternative side = Alternative::TwoSided,
                               double scale = kDefaultCauchyScale);

/// Paired test on x - y.
BayesFactorResult jzs_bf_paired(std::span<const double> x, std::span<const double> y,
                                Alternative side = Alternative::TwoSided,
                                double scale = kDefaultCauchyScale);

// ---- distances, rank statistics ------------------------------------------

struct ModelDistances {
  double d_time = 0.0;       // to (0, 1)
  double d_invariant = 0.0;  // to the diagonal eta_add = eta_mult
};

ModelDistances distance_to_models(double eta_add, double eta_mult);

/// Tie-adjusted Kendall tau-b in O(n log n); empty when either vector is
/// entirely tied.
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

struct WilcoxonResult {
  double v = 0.0;  // sum of ranks of positive differences
  double p = 1.0;  // two-sided
  int n = 0;       // after dropping zeros
  bool exact = false;
};

inline constexpr int kWilcoxonExactMax = 25;

/// Signed-rank test of samples - null_value. Exact null distribution for
/// n <= 25 (midranks handled on doubled ranks), normal approximation above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> samples, double null_value = 0.0);

/// Exact P(V <= v) under the null for the given (possibly tied) ranks.
double wilcoxon_exact_cdf(std::span<const double> ranks, double v);

// ---- growth against deviation from time optimality ------------------------

/// Mean growth rate of the gambles a subject chose in one session; timeouts
/// count as the worst stimulus of the trial.
double session_growth(const ConditionData& cond);

/// Mean over trials of the average growth of the two offered gambles.
double schedule_mean_growth(const ConditionData& cond);

struct GrowthDeviation {
  Dynamic condition = Dynamic::Additive;
  std::vector<std::string> subjects;
  std::vector<double> deviation;  // |eta - eta_opt|
  std::vector<double> growth;
  std::optional<double> tau;
};

/// `eta[i]` is the point estimate for `data[i]` in `condition`.
GrowthDeviation growth_vs_deviation(std::span<const SubjectDataset> data,
                                    std::span<const double> eta, Dynamic condition);

}  // namespace ergo
