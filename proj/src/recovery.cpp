#include "ergo/recovery.hpp"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <string>

namespace ergo {

namespace {

constexpr std::array<double, 3> kPtAlpha{0.4, 0.6, 0.8};
constexpr std::array<double, 3> kPtLambda{1.5, 2.25, 3.0};
constexpr std::array<double, 9> kIsoEta{-0.5, -0.25, 0.25, 0.4, 0.5, 0.6, 0.75, 1.25, 1.5};

struct Spaces {
  GambleSpace additive;
  GambleSpace multiplicative;
};

Spaces spaces(std::uint64_t seed) {
  return {build_gamble_space(build_stimulus_set(Dynamic::Additive), mix_seed(seed, 1)),
          build_gamble_space(build_stimulus_set(Dynamic::Multiplicative), mix_seed(seed, 2))};
}

SubjectDataset simulate(const AgentConfig& agent, const Spaces& sp, std::uint64_t seed, int i) {
  const auto k = static_cast<std::uint64_t>(i);
  return simulate_subject(agent, make_schedule(sp.additive, mix_seed(seed, 100 + k)),
                          make_schedule(sp.multiplicative, mix_seed(seed, 200 + k)),
                          mix_seed(seed, 300 + k));
}

AgentConfig calibrated_agent(std::string id, const UtilityModelSpec& model,
                             const CohortOptions& opt) {
  AgentConfig a;
  a.id = std::move(id);
  for (Dynamic d : kDynamics) {
    a[d] = ConditionAgent{model, calibrated_sensitivity(model, d, {kEndowment}, opt.target,
                                                        opt.clamp_beta),
                          {kEndowment}};
  }
  return a;
}

std::string label(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i);
  return buf;
}

UtilityModelSpec family_member(ModelFamily f, int i) {
  switch (f) {
    case ModelFamily::ProspectTheory: {
      const double a = kPtAlpha[static_cast<std::size_t>(i % 3)];
      return ProspectTheoryParams{a, a, kPtLambda[static_cast<std::size_t>((i / 3) % 3)]};
    }
    case ModelFamily::Isoelastic:
      return IsoelasticParams{kIsoEta[static_cast<std::size_t>(i % 9)]};
    default:
      return TimeOptimalParams{};
  }
}

const char* prefix(ModelFamily f) {
  switch (f) {
    case ModelFamily::ProspectTheory: return "pt";
    case ModelFamily::Isoelastic: return "iso";
    default: return "to";
  }
}

}  // namespace

std::vector<SubjectDataset> isoelastic_cohort(double eta_add, double eta_mult, int n,
                                              const CohortOptions& opt) {
  const Spaces sp = spaces(opt.seed);
  std::vector<SubjectDataset> out;
  for (int i = 0; i < n; ++i) {
    AgentConfig a;
    a.id = label("s", i);
    for (Dynamic d : kDynamics) {
      const UtilityModelSpec m = IsoelasticParams{d == Dynamic::Additive ? eta_add : eta_mult};
      a[d] = ConditionAgent{m, calibrated_sensitivity(m, d, {kEndowment}, opt.target, opt.clamp_beta),
                            {kEndowment}};
    }
    out.push_back(simulate(a, sp, opt.seed, i));
  }
  return out;
}

LabelledCohort single_model_cohort(ModelFamily family, int n, const CohortOptions& opt) {
  const Spaces sp = spaces(opt.seed);
  LabelledCohort out;
  for (int i = 0; i < n; ++i) {
    const AgentConfig a = calibrated_agent(label(prefix(family), i), family_member(family, i), opt);
    out.data.push_back(simulate(a, sp, opt.seed, i));
    out.truth.push_back(family);
  }
  return out;
}

LabelledCohort model_recovery_cohort(const CohortOptions& opt) {
  const Spaces sp = spaces(opt.seed);
  LabelledCohort out;
  int k = 0;
  for (ModelFamily f :
       {ModelFamily::TimeOptimal, ModelFamily::ProspectTheory, ModelFamily::Isoelastic}) {
    for (int i = 0; i < 9; ++i) {
      const AgentConfig a = calibrated_agent(label(prefix(f), i), family_member(f, i), opt);
      out.data.push_back(simulate(a, sp, opt.seed, k++));
      out.truth.push_back(f);
    }
  }
  return out;
}

bool ParameterRecoveryCell::recovered(double tol) const {
  return std::abs(error_add()) <= tol && std::abs(error_mult()) <= tol;
}

ParameterRecoveryCell recover_parameters(double eta_add, double eta_mult, int subjects,
                                         const SamplerConfig& cfg, const CohortOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = isoelastic_cohort(eta_add, eta_mult, subjects, opt);
  const PosteriorChains post = sample_posterior(data, HierarchicalIsoelasticSpec{}, cfg);
  ParameterRecoveryCell cell;
  cell.eta_add = eta_add;
  cell.eta_mult = eta_mult;
  cell.map_add = map_estimate(pooled_subject_draws(post, "eta", Dynamic::Additive));
  cell.map_mult = map_estimate(pooled_subject_draws(post, "eta", Dynamic::Multiplicative));
  cell.max_rhat = max_population_rhat(post);
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

ModelRecoveryReport recover_models(const LabelledCohort& cohort, const LatentMixtureSpec& spec,
                                   const SamplerConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelRecoveryReport rep;
  rep.cohort = cohort;
  rep.mixture = run_latent_mixture(cohort.data, spec, cfg);
  for (std::size_t i = 0; i < cohort.data.size(); ++i) {
    if (rep.mixture.modal(i) == cohort.truth[i]) ++rep.correct;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace ergo
