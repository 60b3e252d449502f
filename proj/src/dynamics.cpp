#include "ergo/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ergo {

std::string_view to_string(Dynamic d) {
  return d == Dynamic::Additive ? "additive" : "multiplicative";
}

Dynamic dynamic_from_string(std::string_view s) {
  if (s == "additive" || s == "add") return Dynamic::Additive;
  if (s == "multiplicative" || s == "mult") return Dynamic::Multiplicative;
  throw std::invalid_argument("unknown dynamic '" + std::string(s) + "'");
}

StimulusOutcome additive_outcome(int id, double increment) {
  return StimulusOutcome{id, increment, Dynamic::Additive, 0.0};
}

StimulusOutcome multiplicative_outcome(int id, double factor) {
  if (!(factor > 0.0)) {
    throw std::domain_error("growth factor must be strictly positive");
  }
  return StimulusOutcome{id, factor, Dynamic::Multiplicative, std::log(factor)};
}

StimulusOutcome multiplicative_outcome_from_log(int id, double log_factor) {
  return StimulusOutcome{id, std::exp(log_factor), Dynamic::Multiplicative, log_factor};
}

Gamble::Gamble(StimulusOutcome first, StimulusOutcome second)
    : first_(first), second_(second) {
  if (first_.dynamic != second_.dynamic) {
    throw std::invalid_argument("gamble outcomes must share one dynamic");
  }
}

WealthState apply_outcome(WealthState w, const StimulusOutcome& s) {
  if (s.dynamic == Dynamic::Additive) return {w.amount + s.value};
  if (!(w.amount > 0.0)) {
    throw std::domain_error("multiplicative update requires positive wealth");
  }
  return {w.amount * s.value};
}

WealthState wealth_after_sequence(WealthState w0, std::span<const StimulusOutcome> seq) {
  if (seq.empty()) return w0;
  const Dynamic d = seq.front().dynamic;
  WealthState w = w0;
  for (const auto& s : seq) {
    if (s.dynamic != d) {
      throw std::invalid_argument("sequence mixes additive and multiplicative outcomes");
    }
    w = apply_outcome(w, s);
  }
  return w;
}

double finite_time_growth(WealthState w0, WealthState wT, int trials, Dynamic d) {
  if (trials < 1) throw std::invalid_argument("finite_time_growth: trials must be >= 1");
  const double T = static_cast<double>(trials);
  if (d == Dynamic::Additive) return (wT.amount - w0.amount) / T;
  if (!(w0.amount > 0.0) || !(wT.amount > 0.0)) {
    throw std::domain_error("multiplicative growth requires positive wealth");
  }
  return (std::log(wT.amount) - std::log(w0.amount)) / T;
}

double gamble_growth_rate(const Gamble& g) {
  return Gamble::kProbability * g.first().growth_contribution() +
         Gamble::kProbability * g.second().growth_contribution();
}

double gamble_expectation(const Gamble& g) {
  return Gamble::kProbability * g.first().value + Gamble::kProbability * g.second().value;
}

}  // namespace ergo
