#include "ergo/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "mcmc_detail.hpp"

namespace ergo {

ModelFamily LatentMixtureResult::modal(std::size_t subject) const {
  const auto& p = probabilities.at(subject);
  return static_cast<ModelFamily>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace {

using detail::ConditionEval;
using detail::RandomWalk;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr int kMaxInitAttempts = 100;

double upper_tail(double x) { return 0.5 * std::erfc(x / kSqrt2); }  // P(Z > x)
double lower_tail(double x) { return 0.5 * std::erfc(-x / kSqrt2); }  // P(Z < x)

// ln P(lo <= X <= hi), X ~ N(mu, sd), computed on the accurate tail.
double log_mass(double mu, double sd, double lo, double hi) {
  if (lo == -kInf && hi == kInf) return 0.0;
  const double a = (lo - mu) / sd, b = (hi - mu) / sd;
  double m;
  if (a > 0.0) {
    m = upper_tail(a) - upper_tail(b);
  } else if (b < 0.0) {
    m = lower_tail(b) - lower_tail(a);
  } else {
    m = 1.0 - lower_tail(a) - upper_tail(b);
  }
  return std::log(std::max(m, 1e-300));
}

double trunc_logpdf(double x, double mu, double sd, double lo, double hi) {
  if (x < lo || x > hi) return -kInf;
  const double z = (x - mu) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z - log_mass(mu, sd, lo, hi);
}

// Inverse-CDF draw from N(mu, sd) restricted to [lo, hi].
double trunc_sample(double mu, double sd, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (lo == -kInf && hi == kInf) {
    std::normal_distribution<double> n(mu, sd);
    return n(rng);
  }
  const double a = (lo - mu) / sd, b = (hi - mu) / sd;
  const double u = unif(rng);
  double z;
  if (a > 0.0) {
    const double qa = upper_tail(a), qb = upper_tail(b);
    const double q = std::clamp(qa - u * (qa - qb), 1e-300, 1.0);
    z = kSqrt2 * boost::math::erfc_inv(2.0 * q);
  } else {
    const double pa = lower_tail(a), pb = lower_tail(b);
    const double p = std::clamp(pa + u * (pb - pa), 1e-300, 1.0 - 1e-16);
    z = -kSqrt2 * boost::math::erfc_inv(2.0 * p);
  }
  return std::clamp(mu + sd * z, lo, hi);
}

// A subject-level parameter of one model with its group distribution.
struct Component {
  const char* name;
  double lo = -kInf, hi = kInf;  // restriction of the subject-level value
  bool fixed_mu = false;
  double mu_value = 0.0;
  Support mu_support;
  Support sigma_support;
  int beta_cond = -1;  // ln beta of this condition, or a utility parameter
};

struct ModelLayout {
  ModelFamily family;
  std::vector<Component> comps;
  std::array<int, 2> beta_index{};
};

std::array<ModelLayout, kModelFamilies> make_layouts(const LatentMixtureSpec& s) {
  std::array<ModelLayout, kModelFamilies> m;
  auto beta = [&](const char* name, int c) {
    return Component{name, -kInf, kInf, false, 0.0, s.mu_beta, s.sigma_beta, c};
  };
  {
    ModelLayout& pt = m[static_cast<int>(ModelFamily::ProspectTheory)];
    pt.family = ModelFamily::ProspectTheory;
    Component ag{"ln_alpha_gain", -kInf, 0.0, false, 0.0, s.pt_mu_alpha, s.pt_sigma_alpha};
    Component al{"ln_alpha_loss", -kInf, 0.0, false, 0.0, s.pt_mu_alpha, s.pt_sigma_alpha};
    Component lam{"ln_lambda", -kInf, kInf, false, 0.0, s.pt_mu_lambda, s.pt_sigma_lambda};
    if (s.truncate_lambda) {
      lam.lo = 0.0;
      lam.hi = std::log(s.lambda_max);
    }
    pt.comps = {ag, al, lam, beta("ln_beta_additive", 0), beta("ln_beta_multiplicative", 1)};
    pt.beta_index = {3, 4};
  }
  {
    ModelLayout& iso = m[static_cast<int>(ModelFamily::Isoelastic)];
    iso.family = ModelFamily::Isoelastic;
    Component eta{"eta", -kInf, kInf, false, 0.0, s.iso_mu_eta, s.iso_sigma_eta};
    iso.comps = {eta, beta("ln_beta_additive", 0), beta("ln_beta_multiplicative", 1)};
    iso.beta_index = {1, 2};
  }
  {
    ModelLayout& to = m[static_cast<int>(ModelFamily::TimeOptimal)];
    to.family = ModelFamily::TimeOptimal;
    Component ea{"eta_additive", -kInf, kInf, true, time_optimal_eta(Dynamic::Additive), {}, s.to_sigma_eta};
    Component em{"eta_multiplicative", -kInf, kInf, true, time_optimal_eta(Dynamic::Multiplicative), {},
                 s.to_sigma_eta};
    to.comps = {ea, em, beta("ln_beta_additive", 0), beta("ln_beta_multiplicative", 1)};
    to.beta_index = {2, 3};
  }
  return m;
}

// Does utility under `model` in condition c depend on component j?
bool shapes(ModelFamily model, std::size_t j, std::size_t c) {
  if (model == ModelFamily::TimeOptimal) return j == c;
  return true;
}

using Evals = std::vector<std::array<std::optional<ConditionEval>, 2>>;

struct Hyper {
  double mu = 0.0, sigma = 0.5;
  RandomWalk mu_rw{0.2}, sigma_rw{0.1};
};

struct ModelState {
  std::vector<double> theta;
  std::array<double, 2> ll{0.0, 0.0};
  std::array<std::vector<double>, 2> d;
  std::vector<RandomWalk> rw;        // one per component
  std::vector<RandomWalk> ridge_rw;  // see ridge moves
};

struct SubjectState {
  int z = 0;
  std::array<ModelState, kModelFamilies> m;
  std::array<long, kModelFamilies> z_count{};
  std::array<double, 2> log_wealth{};
  std::array<double, 2> log_dx{};  // mean ln|dx| over non-neutral stimuli
};

/// Per-subject independent normal approximations (pilot mode).
struct PseudoPriors {
  // [subject][model][component] -> (mean, sd)
  std::vector<std::array<std::vector<std::pair<double, double>>, kModelFamilies>> q;
};

struct ChainOutput {
  std::vector<std::array<long, kModelFamilies>> z_counts;
  std::vector<std::pair<std::string, double>> acceptance;
  std::vector<std::vector<std::vector<double>>> draws;  // pilot: [model][subject*comp][draw]
};

class MixtureChain {
 public:
  MixtureChain(const Evals& evals, const LatentMixtureSpec& spec, const SamplerConfig& cfg,
               std::uint64_t seed, const PseudoPriors* pseudo, std::optional<ModelFamily> fixed)
      : evals_(evals), spec_(spec), cfg_(cfg), rng_(seed), layouts_(make_layouts(spec)),
        pseudo_(pseudo), fixed_(fixed) {}

  ChainOutput run(int burn_in, int samples, bool keep_draws) {
    initialize();
    ChainOutput out;
    if (keep_draws) {
      for (std::size_t k = 0; k < kModelFamilies; ++k) {
        out.draws.emplace_back(subjects_.size() * layouts_[k].comps.size());
      }
    }
    for (int it = 0; it < burn_in + samples; ++it) {
      iterate();
      const bool burning = it < burn_in;
      if (burning && cfg_.adapt && (it + 1) % detail::kAdaptWindow == 0) {
        for_each_rw([](const std::string&, RandomWalk& rw) { rw.adapt(); });
      }
      if (it + 1 == burn_in) for_each_rw([](const std::string&, RandomWalk& rw) { rw.reset_counts(); });
      if (!burning) {
        for (auto& s : subjects_) ++s.z_count[s.z];
        if (keep_draws) {
          for (std::size_t k = 0; k < kModelFamilies; ++k) {
            const std::size_t nc = layouts_[k].comps.size();
            for (std::size_t i = 0; i < subjects_.size(); ++i) {
              for (std::size_t j = 0; j < nc; ++j) {
                out.draws[k][i * nc + j].push_back(subjects_[i].m[k].theta[j]);
              }
            }
          }
        }
      }
    }
    for (const auto& s : subjects_) out.z_counts.push_back(s.z_count);
    out.acceptance = acceptance();
    return out;
  }

 private:
  template <class F>
  void for_each_rw(F f) {
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      const std::string model = to_string(static_cast<ModelFamily>(k));
      for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) {
        const std::string comp = layouts_[k].comps[j].name;
        f(model + ".mu_" + comp, hyper_[k][j].mu_rw);
        f(model + ".sigma_" + comp, hyper_[k][j].sigma_rw);
      }
      for (auto& s : subjects_) {
        for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) {
          f(model + "." + layouts_[k].comps[j].name, s.m[k].rw[j]);
        }
        for (auto& r : s.m[k].ridge_rw) f(model + ".ridge", r);
      }
    }
  }

  std::vector<std::pair<std::string, double>> acceptance() {
    std::vector<std::pair<std::string, std::pair<long, long>>> tally;
    for_each_rw([&](const std::string& name, RandomWalk& rw) {
      auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& t) { return t.first == name; });
      if (it == tally.end()) {
        tally.push_back({name, {0, 0}});
        it = tally.end() - 1;
      }
      it->second.first += rw.accepted();
      it->second.second += rw.proposals();
    });
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [name, ap] : tally) {
      if (ap.second > 0) out.emplace_back(name, static_cast<double>(ap.first) / ap.second);
    }
    return out;
  }

  // Per-stimulus utility changes for model k in condition c of subject i.
  bool utilities(std::size_t i, std::size_t k, std::size_t c, const std::vector<double>& theta) {
    const ConditionEval& ev = *evals_[i][c];
    du_.resize(ev.n_stimuli());
    switch (static_cast<ModelFamily>(k)) {
      case ModelFamily::ProspectTheory:
        return model_utilities(
            ev.data(),
            ProspectTheoryParams{std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])}, du_);
      case ModelFamily::Isoelastic:
        return isoelastic_utilities(ev.data(), theta[0], spec_.form, du_);
      case ModelFamily::TimeOptimal:
        return isoelastic_utilities(ev.data(), theta[c], spec_.form, du_);
    }
    return false;
  }

  // Recomputes differences and log likelihood of condition c for theta.
  bool evaluate(std::size_t i, std::size_t k, std::size_t c, const std::vector<double>& theta,
                std::vector<double>& d, double& ll) {
    if (!evals_[i][c]) {
      ll = 0.0;
      return true;
    }
    if (!utilities(i, k, c, theta)) return false;
    evals_[i][c]->differences(du_, d);
    ll = evals_[i][c]->loglik(d, std::exp(theta[layouts_[k].beta_index[c]]));
    return std::isfinite(ll);
  }

  bool evaluate_all(std::size_t i, std::size_t k, ModelState& ms) {
    for (std::size_t c = 0; c < 2; ++c) {
      if (!evaluate(i, k, c, ms.theta, ms.d[c], ms.ll[c])) return false;
    }
    return true;
  }

  double prior_logpdf(std::size_t k, std::size_t j, double x) const {
    const Component& comp = layouts_[k].comps[j];
    const Hyper& h = hyper_[k][j];
    return trunc_logpdf(x, comp.fixed_mu ? comp.mu_value : h.mu, h.sigma, comp.lo, comp.hi);
  }

  void initialize() {
    const std::size_t n = evals_.size();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(rng_); };
    subjects_.assign(n, {});
    for (std::size_t k = 0; k < kModelFamilies; ++k) hyper_[k].assign(layouts_[k].comps.size(), {});

    for (std::size_t i = 0; i < n; ++i) {
      SubjectState& s = subjects_[i];
      for (std::size_t c = 0; c < 2; ++c) {
        s.log_wealth[c] = evals_[i][c] ? std::log(evals_[i][c]->data().wealth) : std::log(kEndowment);
        double sum = 0.0;
        int cnt = 0;
        if (evals_[i][c]) {
          for (const auto& st : evals_[i][c]->data().stimuli) {
            const double dx = std::abs(wealth_change(st, evals_[i][c]->data().wealth));
            if (dx > 0.0) {
              sum += std::log(dx);
              ++cnt;
            }
          }
        }
        s.log_dx[c] = cnt ? sum / cnt : std::log(200.0);
      }
      s.z = fixed_ ? static_cast<int>(*fixed_) : std::uniform_int_distribution<int>(0, 2)(rng_);
      for (std::size_t k = 0; k < kModelFamilies; ++k) {
        ModelState& ms = s.m[k];
        const auto& lay = layouts_[k];
        for (int attempt = 0;; ++attempt) {
          if (attempt == kMaxInitAttempts) {
            throw InitializationFailure("no finite starting point for subject " + std::to_string(i) +
                                        " under " + to_string(lay.family));
          }
          ms.theta.assign(lay.comps.size(), 0.0);
          for (std::size_t j = 0; j < lay.comps.size(); ++j) {
            const Component& comp = lay.comps[j];
            double x;
            if (comp.beta_cond >= 0) {
              x = uni(-2.3, 3.4);
            } else if (lay.family == ModelFamily::ProspectTheory) {
              x = j == 2 ? uni(0.0, std::log(3.0)) : uni(std::log(0.3), std::log(0.9));
            } else if (comp.fixed_mu) {
              x = comp.mu_value + uni(-0.1, 0.1);
            } else {
              x = uni(-0.5, 1.5);
            }
            ms.theta[j] = x;
          }
          if (evaluate_all(i, k, ms)) break;
        }
        ms.rw.clear();
        for (const auto& comp : lay.comps) {
          ms.rw.emplace_back(comp.beta_cond >= 0 ? cfg_.scales.log_beta
                                                 : (lay.family == ModelFamily::ProspectTheory
                                                        ? 0.1
                                                        : cfg_.scales.eta));
        }
        ms.ridge_rw.assign(lay.family == ModelFamily::TimeOptimal ? 2 : 1, RandomWalk(0.05));
      }
    }
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) {
        const Component& comp = layouts_[k].comps[j];
        Hyper& h = hyper_[k][j];
        double mean = 0.0;
        for (const auto& s : subjects_) mean += s.m[k].theta[j];
        mean = n ? mean / n : 0.0;
        h.mu = comp.fixed_mu ? comp.mu_value
                             : std::clamp(mean, comp.mu_support.lo + 1e-3, comp.mu_support.hi - 1e-3);
        h.sigma = std::clamp(0.5, comp.sigma_support.lo + 1e-3, comp.sigma_support.hi);
        h.mu_rw = RandomWalk(cfg_.scales.mu);
        h.sigma_rw = RandomWalk(cfg_.scales.sigma);
      }
    }
  }

  // Single-component random-walk update of the model a subject is assigned to.
  void update_component(std::size_t i, std::size_t k, std::size_t j) {
    ModelState& ms = subjects_[i].m[k];
    const Component& comp = layouts_[k].comps[j];
    RandomWalk& rw = ms.rw[j];
    const double old = ms.theta[j];
    const double prop = rw.propose(old, rng_);
    if (prop < comp.lo || prop > comp.hi) {
      rw.reject();
      return;
    }
    trial_ = ms.theta;
    trial_[j] = prop;
    std::array<double, 2> ll = ms.ll;
    bool ok = true;
    for (std::size_t c = 0; c < 2 && ok; ++c) {
      if (!evals_[i][c]) continue;
      if (comp.beta_cond >= 0) {
        if (comp.beta_cond != static_cast<int>(c)) continue;
        ll[c] = evals_[i][c]->loglik(ms.d[c], std::exp(prop));
      } else if (shapes(layouts_[k].family, j, c)) {
        ok = evaluate(i, k, c, trial_, trial_d_[c], ll[c]);
      }
    }
    if (!ok) {
      rw.reject();
      return;
    }
    const double lr = (ll[0] + ll[1]) - (ms.ll[0] + ms.ll[1]) + prior_logpdf(k, j, prop) -
                      prior_logpdf(k, j, old);
    if (!rw.accept(lr, rng_)) return;
    ms.theta[j] = prop;
    for (std::size_t c = 0; c < 2; ++c) {
      if (comp.beta_cond < 0 && evals_[i][c] && shapes(layouts_[k].family, j, c)) {
        std::swap(ms.d[c], trial_d_[c]);
      }
    }
    ms.ll = ll;
  }

  // Utility parameters and ln beta moved together so the scale of
  // beta * du stays roughly fixed.
  void ridge_move(std::size_t i, std::size_t k, std::size_t r) {
    SubjectState& s = subjects_[i];
    ModelState& ms = s.m[k];
    const ModelLayout& lay = layouts_[k];
    RandomWalk& rw = ms.ridge_rw[r];
    const double e = rw.propose(0.0, rng_);
    trial_ = ms.theta;
    std::array<double, 2> slope{0.0, 0.0};
    switch (lay.family) {
      case ModelFamily::ProspectTheory:
        trial_[0] += e;
        trial_[1] += e;
        // du ~ dx^alpha with alpha near 0.5
        slope = {-0.5 * s.log_dx[0], -0.5 * s.log_dx[1]};
        break;
      case ModelFamily::Isoelastic:
        trial_[0] += e;
        slope = s.log_wealth;
        break;
      case ModelFamily::TimeOptimal:
        trial_[r] += e;
        slope[r] = s.log_wealth[r];
        break;
    }
    for (std::size_t c = 0; c < 2; ++c) trial_[lay.beta_index[c]] += slope[c] * e;
    for (std::size_t j = 0; j < lay.comps.size(); ++j) {
      if (trial_[j] < lay.comps[j].lo || trial_[j] > lay.comps[j].hi) {
        rw.reject();
        return;
      }
    }
    std::array<double, 2> ll{};
    for (std::size_t c = 0; c < 2; ++c) {
      if (!evaluate(i, k, c, trial_, trial_d_[c], ll[c])) {
        rw.reject();
        return;
      }
    }
    double lr = (ll[0] + ll[1]) - (ms.ll[0] + ms.ll[1]);
    for (std::size_t j = 0; j < lay.comps.size(); ++j) {
      if (trial_[j] != ms.theta[j]) lr += prior_logpdf(k, j, trial_[j]) - prior_logpdf(k, j, ms.theta[j]);
    }
    if (!rw.accept(lr, rng_)) return;
    ms.theta = trial_;
    ms.ll = ll;
    for (std::size_t c = 0; c < 2; ++c) {
      if (evals_[i][c]) std::swap(ms.d[c], trial_d_[c]);
    }
  }

  // Fresh draw for a model the subject is not assigned to.
  void draw_inactive(std::size_t i, std::size_t k) {
    ModelState& ms = subjects_[i].m[k];
    const ModelLayout& lay = layouts_[k];
    for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
      for (std::size_t j = 0; j < lay.comps.size(); ++j) {
        const Component& comp = lay.comps[j];
        if (pseudo_) {
          const auto [m, sd] = pseudo_->q[i][k][j];
          ms.theta[j] = trunc_sample(m, sd, comp.lo, comp.hi, rng_);
        } else {
          const Hyper& h = hyper_[k][j];
          ms.theta[j] = trunc_sample(comp.fixed_mu ? comp.mu_value : h.mu, h.sigma, comp.lo, comp.hi, rng_);
        }
      }
      if (evaluate_all(i, k, ms)) return;
    }
    ms.ll = {-kInf, -kInf};
  }

  double pseudo_logpdf(std::size_t i, std::size_t k) const {
    const ModelState& ms = subjects_[i].m[k];
    const ModelLayout& lay = layouts_[k];
    double lp = 0.0;
    for (std::size_t j = 0; j < lay.comps.size(); ++j) {
      const auto [m, sd] = pseudo_->q[i][k][j];
      lp += trunc_logpdf(ms.theta[j], m, sd, lay.comps[j].lo, lay.comps[j].hi);
    }
    return lp;
  }

  double prior_logpdf_all(std::size_t i, std::size_t k) const {
    const ModelState& ms = subjects_[i].m[k];
    double lp = 0.0;
    for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) lp += prior_logpdf(k, j, ms.theta[j]);
    return lp;
  }

  void update_z(std::size_t i) {
    SubjectState& s = subjects_[i];
    std::array<double, kModelFamilies> lw{};
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      lw[k] = s.m[k].ll[0] + s.m[k].ll[1];
      if (pseudo_) lw[k] += prior_logpdf_all(i, k) - pseudo_logpdf(i, k);
    }
    // For models other than k the pseudo-prior terms appear in every weight
    // and cancel; only each model's own prior/pseudo ratio remains.
    const double top = *std::max_element(lw.begin(), lw.end());
    std::array<double, kModelFamilies> w{};
    double total = 0.0;
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      w[k] = std::isfinite(lw[k]) ? std::exp(lw[k] - top) : 0.0;
      total += w[k];
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      if (u < w[k] || k + 1 == kModelFamilies) {
        s.z = static_cast<int>(k);
        break;
      }
      u -= w[k];
    }
  }

  void update_hyper(std::size_t k, std::size_t j) {
    const Component& comp = layouts_[k].comps[j];
    Hyper& h = hyper_[k][j];
    double n = 0.0, s1 = 0.0, s2 = 0.0;
    for (const auto& s : subjects_) {
      if (pseudo_ && s.z != static_cast<int>(k)) continue;
      const double x = s.m[k].theta[j];
      n += 1.0;
      s1 += x;
      s2 += x * x;
    }
    auto target = [&](double mu, double sigma) {
      return detail::normal_loglik_sum(n, s1, s2, mu, sigma) - n * log_mass(mu, sigma, comp.lo, comp.hi);
    };
    if (!comp.fixed_mu) {
      const double prop = h.mu_rw.propose(h.mu, rng_);
      if (comp.mu_support.contains(prop)) {
        if (h.mu_rw.accept(target(prop, h.sigma) - target(h.mu, h.sigma), rng_)) h.mu = prop;
      } else {
        h.mu_rw.reject();
      }
    }
    const double mu = comp.fixed_mu ? comp.mu_value : h.mu;
    const double prop = h.sigma_rw.propose(h.sigma, rng_);
    if (comp.sigma_support.contains(prop)) {
      if (h.sigma_rw.accept(target(mu, prop) - target(mu, h.sigma), rng_)) h.sigma = prop;
    } else {
      h.sigma_rw.reject();
    }
    if ((!comp.fixed_mu && !comp.mu_support.contains(h.mu)) || !comp.sigma_support.contains(h.sigma)) {
      throw std::logic_error("hyperparameter left its support");
    }
  }

  void iterate() {
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      SubjectState& s = subjects_[i];
      const auto k = static_cast<std::size_t>(s.z);
      for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) update_component(i, k, j);
      for (std::size_t r = 0; r < s.m[k].ridge_rw.size(); ++r) ridge_move(i, k, r);
      if (fixed_) continue;
      for (std::size_t other = 0; other < kModelFamilies; ++other) {
        if (other != k) draw_inactive(i, other);
      }
      update_z(i);
    }
    for (std::size_t k = 0; k < kModelFamilies; ++k) {
      if (fixed_ && static_cast<std::size_t>(*fixed_) != k) continue;
      for (std::size_t j = 0; j < layouts_[k].comps.size(); ++j) update_hyper(k, j);
    }
  }

  const Evals& evals_;
  const LatentMixtureSpec& spec_;
  const SamplerConfig& cfg_;
  std::mt19937_64 rng_;
  std::array<ModelLayout, kModelFamilies> layouts_;
  const PseudoPriors* pseudo_;
  std::optional<ModelFamily> fixed_;
  std::vector<SubjectState> subjects_;
  std::array<std::vector<Hyper>, kModelFamilies> hyper_;
  std::vector<double> du_, trial_;
  std::array<std::vector<double>, 2> trial_d_;
};

PseudoPriors fit_pseudo_priors(const Evals& evals, const LatentMixtureSpec& spec,
                               const SamplerConfig& cfg) {
  const auto layouts = make_layouts(spec);
  PseudoPriors out;
  out.q.resize(evals.size());
  std::array<ChainOutput, kModelFamilies> pilots;
  parallel_for(kModelFamilies, cfg.exec, [&](std::size_t k) {
    MixtureChain chain(evals, spec, cfg, mix_seed(cfg.seed, 1000 + k), nullptr,
                       static_cast<ModelFamily>(k));
    pilots[k] = chain.run(spec.pilot_burn_in, spec.pilot_samples, true);
  });
  for (std::size_t k = 0; k < kModelFamilies; ++k) {
    const std::size_t nc = layouts[k].comps.size();
    for (std::size_t i = 0; i < evals.size(); ++i) {
      out.q[i][k].resize(nc);
      for (std::size_t j = 0; j < nc; ++j) {
        const auto& v = pilots[k].draws[k][i * nc + j];
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / std::max<std::size_t>(v.size() - 1, 1));
        // Slightly wider than the pilot posterior so the pseudo-prior covers it.
        out.q[i][k][j] = {mean, std::max(1.5 * sd, 0.02)};
      }
    }
  }
  return out;
}

}  // namespace

LatentMixtureResult run_latent_mixture(std::span<const SubjectDataset> data,
                                       const LatentMixtureSpec& spec, const SamplerConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("run_latent_mixture needs at least one subject");
  if (cfg.chains < 1 || cfg.samples_per_chain < 1 || cfg.burn_in < 0) {
    throw std::invalid_argument("invalid sampler configuration");
  }
  Evals evals(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Dynamic d : kDynamics) {
      const ConditionData* cond = data[i].condition(d);
      if (!cond) continue;
      CompiledCondition cc = compile_condition(*cond);
      if (!cc.empty()) evals[i][index_of(d)].emplace(std::move(cc));
    }
  }

  std::optional<PseudoPriors> pseudo;
  if (spec.pseudo_prior == PseudoPrior::Pilot) pseudo = fit_pseudo_priors(evals, spec, cfg);

  std::vector<ChainOutput> outs(static_cast<std::size_t>(cfg.chains));
  parallel_for(outs.size(), cfg.exec, [&](std::size_t c) {
    MixtureChain chain(evals, spec, cfg, mix_seed(cfg.seed, c), pseudo ? &*pseudo : nullptr,
                       std::nullopt);
    outs[c] = chain.run(cfg.burn_in, cfg.samples_per_chain, false);
  });

  LatentMixtureResult res;
  res.chains = cfg.chains;
  res.samples = cfg.samples_per_chain;
  res.seed = cfg.seed;
  for (const auto& s : data) res.subjects.push_back(s.id);
  res.probabilities.assign(data.size(), {});
  res.per_chain.assign(outs.size(), std::vector<std::array<double, kModelFamilies>>(data.size()));
  for (std::size_t c = 0; c < outs.size(); ++c) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t k = 0; k < kModelFamilies; ++k) {
        const double p = static_cast<double>(outs[c].z_counts[i][k]) / cfg.samples_per_chain;
        res.per_chain[c][i][k] = p;
        res.probabilities[i][k] += p / cfg.chains;
      }
    }
  }
  for (std::size_t b = 0; b < outs.front().acceptance.size(); ++b) {
    double sum = 0.0;
    for (const auto& o : outs) sum += o.acceptance[b].second;
    res.acceptance.emplace_back(outs.front().acceptance[b].first, sum / outs.size());
  }
  return res;
}

}  // namespace ergo
