#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ergo/dataset.hpp"
#include "ergo/utility.hpp"

namespace ergo {

/// Choice probabilities are clamped to [kThetaFloor, 1 - kThetaFloor] before
/// taking logs, so a single surprising choice costs at most ~27.6 nats.
inline constexpr double kThetaFloor = 1e-12;

/// Repeated presentations of the same pair collapsed into left/right counts.
struct PairCount {
  std::array<std::uint8_t, 4> stim{};  // indices into CompiledCondition::stimuli
  int n_left = 0;
  int n_right = 0;
};

/// A condition's choices in the form the samplers evaluate repeatedly.
/// Timeouts carry no left/right information and are dropped.
struct CompiledCondition {
  Dynamic dynamic = Dynamic::Additive;
  double wealth = kEndowment;
  std::vector<StimulusOutcome> stimuli;
  std::vector<PairCount> pairs;
  int n_choices = 0;

  bool empty() const { return n_choices == 0; }
};

CompiledCondition compile_condition(const ConditionData& data);

/// Per-stimulus isoelastic utility changes at the condition's wealth.
/// Returns false when the utility is undefined for some stimulus.
bool isoelastic_utilities(const CompiledCondition& c, double eta, IsoelasticForm form,
                          std::span<double> out);

/// Per-stimulus utility changes for any model; false on a domain error.
bool model_utilities(const CompiledCondition& c, const UtilityModelSpec& model,
                     std::span<double> out);

/// Bernoulli log likelihood of the compiled choices given per-stimulus
/// utility changes and sensitivity beta.
double choice_log_likelihood(const CompiledCondition& c, std::span<const double> du,
                             double beta);

/// Isoelastic log likelihood of one condition of `data`; -inf when the
/// utility is undefined. Conditions that are absent contribute zero.
double log_likelihood(const SubjectDataset& data, double eta, double beta, Dynamic condition,
                      IsoelasticForm form = IsoelasticForm::UtilityDifference);

}  // namespace ergo
