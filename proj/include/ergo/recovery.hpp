#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ergo/agents.hpp"
#include "ergo/mcmc.hpp"
#include "ergo/mixture.hpp"

namespace ergo {

/// Synthetic subjects playing seeded 312-trial schedules in both conditions.
/// Sensitivities come from calibrated_sensitivity.
struct CohortOptions {
  std::uint64_t seed = 1;
  double target = kCalibrationTarget;
  bool clamp_beta = true;
};

/// `n` isoelastic subjects with the given eta per condition.
std::vector<SubjectDataset> isoelastic_cohort(double eta_add, double eta_mult, int n,
                                              const CohortOptions& opt = {});

struct LabelledCohort {
  std::vector<SubjectDataset> data;
  std::vector<ModelFamily> truth;
};

/// 9 time-optimal agents, 9 prospect-theory agents (alpha {0.4, 0.6, 0.8} x
/// lambda {1.5, 2.25, 3}) and 9 isoelastic agents spread over eta in
/// [-0.5, 1.5] away from 0 and 1.
LabelledCohort model_recovery_cohort(const CohortOptions& opt = {});

/// `n` agents of one family, parameters cycling through the grids above.
LabelledCohort single_model_cohort(ModelFamily family, int n, const CohortOptions& opt = {});

struct ParameterRecoveryCell {
  double eta_add = 0.0;
  double eta_mult = 0.0;
  double map_add = 0.0;  // KDE mode of subject eta draws pooled over subjects
  double map_mult = 0.0;
  double max_rhat = 0.0;  // over population-level parameters
  double seconds = 0.0;

  double error_add() const { return map_add - eta_add; }
  double error_mult() const { return map_mult - eta_mult; }
  bool recovered(double tol) const;
};

ParameterRecoveryCell recover_parameters(double eta_add, double eta_mult, int subjects,
                                         const SamplerConfig& cfg, const CohortOptions& opt = {});

struct ModelRecoveryReport {
  LabelledCohort cohort;
  LatentMixtureResult mixture;
  int correct = 0;
  double seconds = 0.0;
};

ModelRecoveryReport recover_models(const LabelledCohort& cohort, const LatentMixtureSpec& spec,
                                   const SamplerConfig& cfg);

}  // namespace ergo
