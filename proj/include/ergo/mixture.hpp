#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ergo/dataset.hpp"
#include "ergo/mcmc.hpp"

namespace ergo {

/// How parameters of a model a subject is not currently assigned to are drawn.
enum class PseudoPrior {
  /// From the model's group-level distribution.
  GroupPrior,
  /// From per-subject normal approximations fitted in a pilot run of each
  /// model alone (Carlin-Chib); the indicator update carries the
  /// prior-over-pseudo-prior ratio.
  Pilot,
};

/// Hierarchical latent mixture over prospect theory, isoelastic and
/// time-optimal utility. Every model has its own per-subject, per-condition
/// sensitivity with a lognormal group distribution.
struct LatentMixtureSpec {
  Support mu_beta{-2.3, 3.4};
  Support sigma_beta{0.01, 1.6};
  // time optimal: eta_{i,c} ~ N(0 or 1, sigma_c)
  Support to_sigma_eta{0.01, 1.6};
  // isoelastic: one eta per subject
  Support iso_mu_eta{-2.5, 2.5};
  Support iso_sigma_eta{0.0, 1.6, true};
  // prospect theory, on log scale; alpha is kept below 1
  Support pt_mu_alpha{-2.3, 0.0};
  Support pt_sigma_alpha{0.0, 1.6, true};
  Support pt_mu_lambda{0.0, 1.6};
  Support pt_sigma_lambda{0.0, 1.6, true};
  /// Restrict lambda to [1, 5]; otherwise lambda > 0 unrestricted.
  bool truncate_lambda = true;
  double lambda_max = 5.0;
  PseudoPrior pseudo_prior = PseudoPrior::Pilot;
  IsoelasticForm form = IsoelasticForm::UtilityDifference;
  /// Pilot length (per model) when pseudo_prior == Pilot.
  int pilot_burn_in = 500;
  int pilot_samples = 1000;
};

struct LatentMixtureResult {
  std::vector<std::string> subjects;
  /// Relative frequency of z draws per subject, indexed by ModelFamily.
  std::vector<std::array<double, kModelFamilies>> probabilities;
  /// The same per chain, for seed-agreement checks: [chain][subject].
  std::vector<std::vector<std::array<double, kModelFamilies>>> per_chain;
  /// Post-burn-in acceptance per proposal block, averaged over chains.
  std::vector<std::pair<std::string, double>> acceptance;
  int chains = 0;
  int samples = 0;
  std::uint64_t seed = 0;

  ModelFamily modal(std::size_t subject) const;
};

LatentMixtureResult run_latent_mixture(std::span<const SubjectDataset> data,
                                       const LatentMixtureSpec& spec, const SamplerConfig& cfg);

/// Group-level random-effects comparison of the three models.
struct ModelComparisonResult {
  std::vector<std::array<double, kModelFamilies>> subject_probabilities;
  std::array<double, kModelFamilies> alpha{};
  std::array<double, kModelFamilies> frequency{};
  std::array<double, kModelFamilies> frequency_sd{};
  std::array<double, kModelFamilies> exceedance{};
  std::array<double, kModelFamilies> protected_exceedance{};
  double bor = 0.0;
  double free_energy = 0.0;       // random-effects model
  double null_free_energy = 0.0;  // uniform-frequency model
};

inline constexpr int kExceedanceDraws = 100000;
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kAlphaFloor = 1e-6;

struct DirichletFit {
  std::vector<double> alpha;
  std::vector<std::vector<double>> responsibilities;  // [subject][model]
  double free_energy = 0.0;
  int iterations = 0;
};

/// Variational Dirichlet random-effects fit on log evidences, prior alpha0 = 1.
DirichletFit fit_dirichlet_random_effects(std::span<const std::vector<double>> log_evidence,
                                          double alpha0 = 1.0);

/// Free energy of the null model with all model frequencies equal.
double null_free_energy(std::span<const std::vector<double>> log_evidence);

/// P(r_k is the largest) under Dirichlet(alpha), by Monte Carlo.
std::vector<double> exceedance_probabilities(std::span<const double> alpha, std::uint64_t seed,
                                             int draws = kExceedanceDraws);

/// (frequency mean, frequency sd) from subject posterior model probabilities.
std::pair<std::array<double, kModelFamilies>, std::array<double, kModelFamilies>>
estimated_frequencies(std::span<const std::array<double, kModelFamilies>> subject_probs);

/// PXP_k = phi_k (1 - BOR) + BOR / K.
std::vector<double> protect(std::span<const double> exceedance, double bor);

ModelComparisonResult protected_exceedance(
    std::span<const std::array<double, kModelFamilies>> subject_probs, std::uint64_t seed = 1);

}  // namespace ergo
