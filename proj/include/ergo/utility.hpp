#pragma once

#include <string>
#include <variant>

#include "ergo/design.hpp"
#include "ergo/dynamics.hpp"

namespace ergo {

/// How the isoelastic family turns a wealth change into a utility change.
enum class IsoelasticForm {
  /// u(w + dx) - u(w) with u(x) = (x^(1-eta) - 1)/(1 - eta), ln x at eta = 1.
  UtilityDifference,
  /// First-order form dx * w^(-eta); eta = 1 still uses the exact log difference.
  Marginal,
};

struct ProspectTheoryParams {
  double alpha_gain = 0.5;
  double alpha_loss = 0.5;
  double lambda = 1.0;
};

struct IsoelasticParams {
  double eta = 0.0;
  IsoelasticForm form = IsoelasticForm::UtilityDifference;
};

/// Linear utility under additive dynamics, log utility under multiplicative.
struct TimeOptimalParams {
  IsoelasticForm form = IsoelasticForm::UtilityDifference;
};

enum class ModelFamily { ProspectTheory = 0, Isoelastic = 1, TimeOptimal = 2 };
inline constexpr int kModelFamilies = 3;

std::string to_string(ModelFamily m);

using UtilityModelSpec = std::variant<ProspectTheoryParams, IsoelasticParams, TimeOptimalParams>;

ModelFamily family_of(const UtilityModelSpec& m);

/// Risk-aversion parameter the time-optimal model assigns to a dynamic.
inline constexpr double time_optimal_eta(Dynamic d) { return d == Dynamic::Additive ? 0.0 : 1.0; }

/// Wealth change implied by stimulus `s` at wealth `w`: the increment, or
/// w * (factor - 1) under multiplicative dynamics.
double wealth_change(const StimulusOutcome& s, double w);

/// Isoelastic utility change for a stimulus. Throws std::domain_error when a
/// power or log of non-positive wealth would be needed.
double isoelastic_delta(const StimulusOutcome& s, double w, double eta,
                        IsoelasticForm form = IsoelasticForm::UtilityDifference);

double prospect_delta(double dx, const ProspectTheoryParams& p);

double delta_utility(const UtilityModelSpec& model, WealthState w, const StimulusOutcome& s);
double expected_delta_utility(const Gamble& g, const UtilityModelSpec& model, WealthState w);

/// <du_left> - <du_right>.
double utility_difference(const GamblePair& p, const UtilityModelSpec& model, WealthState w);

/// Logistic choice rule: probability of choosing the left gamble. Saturates
/// cleanly for large |beta * du|.
double choice_probability(double delta_u, double beta);

/// log(choice_probability(x, 1)) without overflow.
double log_sigmoid(double x);

}  // namespace ergo
