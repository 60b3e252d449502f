#include "ergo/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ergo {

namespace {

const double kLogFloor = std::log(kThetaFloor);
const double kLogCeil = std::log1p(-kThetaFloor);

inline double clamped_log_sigmoid(double x) {
  return std::clamp(log_sigmoid(x), kLogFloor, kLogCeil);
}

}  // namespace

CompiledCondition compile_condition(const ConditionData& data) {
  CompiledCondition out;
  out.dynamic = data.dynamic;
  out.wealth = data.wealth.amount;

  std::map<int, std::uint8_t> slot;
  auto index = [&](const StimulusOutcome& s) {
    auto it = slot.find(s.id);
    if (it != slot.end()) return it->second;
    if (out.stimuli.size() >= 255) throw std::invalid_argument("too many distinct stimuli");
    const auto k = static_cast<std::uint8_t>(out.stimuli.size());
    out.stimuli.push_back(s);
    slot.emplace(s.id, k);
    return k;
  };

  std::map<std::array<std::uint8_t, 4>, std::size_t> seen;
  for (const auto& t : data.trials) {
    if (t.choice == Choice::Timeout) continue;
    if (t.pair.dynamic() != data.dynamic) {
      throw std::invalid_argument("trial dynamic does not match its condition");
    }
    const std::array<std::uint8_t, 4> key{index(t.pair.left.first()), index(t.pair.left.second()),
                                          index(t.pair.right.first()),
                                          index(t.pair.right.second())};
    // A pair and its mirror image carry the same information with sides
    // swapped; store one canonical orientation.
    const std::array<std::uint8_t, 4> mirror{key[2], key[3], key[0], key[1]};
    const bool flip = mirror < key;
    auto [it, fresh] = seen.emplace(flip ? mirror : key, out.pairs.size());
    if (fresh) out.pairs.push_back(PairCount{flip ? mirror : key, 0, 0});
    PairCount& pc = out.pairs[it->second];
    ((t.choice == Choice::Left) != flip ? pc.n_left : pc.n_right) += 1;
    ++out.n_choices;
  }
  return out;
}

bool isoelastic_utilities(const CompiledCondition& c, double eta, IsoelasticForm form,
                          std::span<double> out) {
  try {
    for (std::size_t k = 0; k < c.stimuli.size(); ++k) {
      out[k] = isoelastic_delta(c.stimuli[k], c.wealth, eta, form);
      if (!std::isfinite(out[k])) return false;
    }
  } catch (const std::domain_error&) {
    return false;
  }
  return true;
}

bool model_utilities(const CompiledCondition& c, const UtilityModelSpec& model,
                     std::span<double> out) {
  try {
    for (std::size_t k = 0; k < c.stimuli.size(); ++k) {
      out[k] = delta_utility(model, WealthState{c.wealth}, c.stimuli[k]);
      if (!std::isfinite(out[k])) return false;
    }
  } catch (const std::domain_error&) {
    return false;
  }
  return true;
}

double choice_log_likelihood(const CompiledCondition& c, std::span<const double> du,
                             double beta) {
  double ll = 0.0;
  for (const auto& p : c.pairs) {
    const double d = 0.5 * (du[p.stim[0]] + du[p.stim[1]]) - 0.5 * (du[p.stim[2]] + du[p.stim[3]]);
    const double x = beta * d;
    if (p.n_left) ll += p.n_left * clamped_log_sigmoid(x);
    if (p.n_right) ll += p.n_right * clamped_log_sigmoid(-x);
  }
  return ll;
}

double log_likelihood(const SubjectDataset& data, double eta, double beta, Dynamic condition,
                      IsoelasticForm form) {
  const ConditionData* cond = data.condition(condition);
  if (!cond) return 0.0;
  const CompiledCondition c = compile_condition(*cond);
  std::vector<double> du(c.stimuli.size());
  if (!isoelastic_utilities(c, eta, form, du)) return -std::numeric_limits<double>::infinity();
  return choice_log_likelihood(c, du, beta);
}

}  // namespace ergo
