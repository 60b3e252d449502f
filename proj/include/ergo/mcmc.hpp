#pragma once

#include <cstdint>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergo/dataset.hpp"
#include "ergo/parallel.hpp"
#include "ergo/utility.hpp"

namespace ergo {

/// Uniform hyperprior support. The lower end may be open (sigma_eta).
struct Support {
  double lo = 0.0;
  double hi = 1.0;
  bool open_lo = false;

  bool contains(double x) const { return (open_lo ? x > lo : x >= lo) && x <= hi; }
  double width() const { return hi - lo; }
};

/// Dynamic-specific isoelastic model: per condition c,
///   eta_{i,c} ~ N(mu_eta_c, sigma_eta_c), ln beta_{i,c} ~ N(mu_beta_c, sigma_beta_c),
/// with uniform hyperpriors on the supports below.
struct HierarchicalIsoelasticSpec {
  Support mu_eta{-2.5, 2.5};
  Support sigma_eta{0.0, 1.6, true};
  Support mu_beta{-2.3, 3.4};
  Support sigma_beta{0.01, 1.6};
  IsoelasticForm form = IsoelasticForm::UtilityDifference;
};

/// Initial random-walk standard deviations; tuned during burn-in.
struct ProposalScales {
  double eta = 0.2;
  double log_beta = 0.3;
  double mu = 0.2;
  double sigma = 0.1;
};

struct SamplerConfig {
  int chains = 10;
  int samples_per_chain = 10000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
  ProposalScales scales;
  bool adapt = true;
  Execution exec = Execution::Parallel;

  static SamplerConfig parameter_estimation() { return {}; }
  static SamplerConfig model_selection() {
    SamplerConfig c;
    c.chains = 4;
    return c;
  }
};

/// Thrown when no finite starting point is found.
class InitializationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Retained draws, one row per parameter, stored chain-major.
struct PosteriorChains {
  int chains = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> draws;
  /// Post-burn-in acceptance rate per proposal block, averaged over chains.
  std::vector<std::pair<std::string, double>> acceptance;

  std::size_t size() const { return names.size(); }
  std::size_t index(std::string_view name) const;  // throws std::out_of_range
  bool has(std::string_view name) const;
  std::span<const double> chain(std::size_t param, int c) const;
  std::span<const double> pooled(std::size_t param) const { return draws.at(param); }
  std::span<const double> pooled(std::string_view name) const { return pooled(index(name)); }
};

/// "mu_eta[additive]", "eta[s01][multiplicative]", ...
std::string population_param(std::string_view name, Dynamic d);
std::string subject_param(std::string_view name, std::string_view subject, Dynamic d);

/// Metropolis-within-Gibbs over all subjects and both conditions. Subjects
/// lacking a condition have their parameters drawn from the group prior.
PosteriorChains sample_posterior(std::span<const SubjectDataset> data,
                                 const HierarchicalIsoelasticSpec& spec, const SamplerConfig& cfg);

/// Potential scale reduction sqrt((W + B/n) / W) over equal-length chains.
double compute_rhat(std::span<const std::span<const double>> chains);
double compute_rhat(const PosteriorChains& post, std::size_t param);

/// Mode of a Gaussian KDE (Silverman bandwidth, 4096-point grid spanning the
/// draw range +/- 3 bandwidths).
double map_estimate(std::span<const double> draws);

/// Empirical percentile (linear interpolation between order statistics).
double percentile(std::span<const double> draws, double q);
/// Central interval holding `mass` of the draws.
std::pair<double, double> central_interval(std::span<const double> draws, double mass = 0.95);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double map = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  double rhat = 1.0;
};

ParameterSummary summarize(const PosteriorChains& post, std::size_t param);
std::vector<ParameterSummary> summarize(const PosteriorChains& post);

/// Subject-level eta draws for one condition, pooled over subjects.
std::vector<double> pooled_subject_draws(const PosteriorChains& post, std::string_view name,
                                         Dynamic d);

/// Largest R-hat over the population-level parameters.
double max_population_rhat(const PosteriorChains& post);

}  // namespace ergo
