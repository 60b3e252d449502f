#include "ergo/utility.hpp"

#include <cmath>
#include <stdexcept>

namespace ergo {

std::string to_string(ModelFamily m) {
  switch (m) {
    case ModelFamily::ProspectTheory: return "prospect_theory";
    case ModelFamily::Isoelastic: return "isoelastic";
    case ModelFamily::TimeOptimal: return "time_optimal";
  }
  return "unknown";
}

ModelFamily family_of(const UtilityModelSpec& m) {
  return static_cast<ModelFamily>(m.index());
}

double wealth_change(const StimulusOutcome& s, double w) {
  return s.dynamic == Dynamic::Additive ? s.value : w * (s.value - 1.0);
}

namespace {

// ln((w + dx) / w), taken straight from the grid for multiplicative outcomes.
double log_ratio(const StimulusOutcome& s, double w) {
  if (s.dynamic == Dynamic::Multiplicative) return s.log_value;
  if (!(w + s.value > 0.0)) throw std::domain_error("isoelastic utility of non-positive wealth");
  return std::log1p(s.value / w);
}

}  // namespace

double isoelastic_delta(const StimulusOutcome& s, double w, double eta, IsoelasticForm form) {
  if (!(w > 0.0)) throw std::domain_error("isoelastic utility needs positive wealth");
  const double dx = wealth_change(s, w);
  if (eta == 1.0) return log_ratio(s, w);
  if (form == IsoelasticForm::Marginal) return dx * std::pow(w, -eta);
  if (eta == 0.0) return dx;
  // w^(1-eta) * ((1 + dx/w)^(1-eta) - 1) / (1-eta), written with expm1 so the
  // limit eta -> 1 is approached smoothly.
  const double k = 1.0 - eta;
  return std::pow(w, k) * std::expm1(k * log_ratio(s, w)) / k;
}

double prospect_delta(double dx, const ProspectTheoryParams& p) {
  if (dx > 0.0) return std::pow(dx, p.alpha_gain);
  return -p.lambda * std::pow(-dx, p.alpha_loss);
}

double delta_utility(const UtilityModelSpec& model, WealthState w, const StimulusOutcome& s) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ProspectTheoryParams>) {
          return prospect_delta(wealth_change(s, w.amount), m);
        } else if constexpr (std::is_same_v<T, IsoelasticParams>) {
          return isoelastic_delta(s, w.amount, m.eta, m.form);
        } else {
          return isoelastic_delta(s, w.amount, time_optimal_eta(s.dynamic), m.form);
        }
      },
      model);
}

double expected_delta_utility(const Gamble& g, const UtilityModelSpec& model, WealthState w) {
  return Gamble::kProbability * delta_utility(model, w, g.first()) +
         Gamble::kProbability * delta_utility(model, w, g.second());
}

double utility_difference(const GamblePair& p, const UtilityModelSpec& model, WealthState w) {
  return expected_delta_utility(p.left, model, w) - expected_delta_utility(p.right, model, w);
}

double choice_probability(double delta_u, double beta) {
  const double x = beta * delta_u;
  if (std::isnan(x)) return 0.5;
  // Negative arguments are mirrored so that p(-x) == 1 - p(x) holds bit for bit.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  return 1.0 - 1.0 / (1.0 + std::exp(x));
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace ergo
