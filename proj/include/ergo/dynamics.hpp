#pragma once

#include <array>
#include <span>
#include <string_view>

namespace ergo {

/// Wealth-update regime. Additive stimuli add an increment in DKK,
/// multiplicative stimuli scale wealth by a growth factor.
enum class Dynamic { Additive, Multiplicative };

std::string_view to_string(Dynamic d);
Dynamic dynamic_from_string(std::string_view s);

inline constexpr std::array<Dynamic, 2> kDynamics{Dynamic::Additive, Dynamic::Multiplicative};

inline constexpr std::size_t index_of(Dynamic d) { return d == Dynamic::Additive ? 0 : 1; }

/// One stimulus and its deterministic wealth effect.
///
/// `value` is an increment in DKK under additive dynamics and a dimensionless
/// growth factor (strictly positive) under multiplicative dynamics. Build
/// instances through the factory functions below so that `log_value` is set.
struct StimulusOutcome {
  int id = 0;
  double value = 0.0;
  Dynamic dynamic = Dynamic::Additive;
  // ln(value) for multiplicative outcomes. Sets built on a log grid store the
  // exact grid point so growth rates carry no exp/log round-off.
  double log_value = 0.0;

  /// Per-trial growth contribution: the increment (additive) or the log
  /// growth factor (multiplicative).
  double growth_contribution() const {
    return dynamic == Dynamic::Additive ? value : log_value;
  }
};

StimulusOutcome additive_outcome(int id, double increment);
StimulusOutcome multiplicative_outcome(int id, double factor);
/// Multiplicative outcome specified by its log growth factor.
StimulusOutcome multiplicative_outcome_from_log(int id, double log_factor);

/// Fair two-outcome gamble; both outcomes carry probability 0.5.
class Gamble {
 public:
  Gamble(StimulusOutcome first, StimulusOutcome second);

  const StimulusOutcome& first() const { return first_; }
  const StimulusOutcome& second() const { return second_; }
  Dynamic dynamic() const { return first_.dynamic; }
  static constexpr double kProbability = 0.5;

 private:
  StimulusOutcome first_;
  StimulusOutcome second_;
};

struct WealthState {
  double amount = 1000.0;
};

inline constexpr double kEndowment = 1000.0;

WealthState apply_outcome(WealthState w, const StimulusOutcome& s);

/// Folds apply_outcome over `seq`. All outcomes must share one dynamic.
WealthState wealth_after_sequence(WealthState w0, std::span<const StimulusOutcome> seq);

/// Finite-time average growth over `trials` trials (one trial = one time unit):
/// (wT - w0)/T additively, (ln wT - ln w0)/T multiplicatively.
double finite_time_growth(WealthState w0, WealthState wT, int trials, Dynamic d);

/// Time-average growth rate of a gamble: mean increment (additive) or mean
/// log growth factor (multiplicative), per trial.
double gamble_growth_rate(const Gamble& g);

/// Expectation value of the gamble in native units: expected increment or
/// expected growth factor.
double gamble_expectation(const Gamble& g);

}  // namespace ergo
