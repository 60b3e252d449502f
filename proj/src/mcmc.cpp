#include "ergo/mcmc.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <tuple>

#include "mcmc_detail.hpp"

namespace ergo {

using detail::ConditionEval;
using detail::RandomWalk;

std::size_t PosteriorChains::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

bool PosteriorChains::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::span<const double> PosteriorChains::chain(std::size_t param, int c) const {
  if (c < 0 || c >= chains) throw std::out_of_range("chain index");
  const auto& row = draws.at(param);
  return std::span<const double>(row).subspan(static_cast<std::size_t>(c) * samples,
                                              static_cast<std::size_t>(samples));
}

std::string population_param(std::string_view name, Dynamic d) {
  return std::string(name) + "[" + std::string(to_string(d)) + "]";
}

std::string subject_param(std::string_view name, std::string_view subject, Dynamic d) {
  return std::string(name) + "[" + std::string(subject) + "][" + std::string(to_string(d)) + "]";
}

namespace {

constexpr int kMaxInitAttempts = 100;

struct SubjectState {
  double eta = 0.0;
  double log_beta = 0.0;
  double ll = 0.0;
  double ridge = 0.0;  // d ln|du| / d eta, roughly -ln(wealth)
  std::vector<double> d;
  RandomWalk eta_rw;
  RandomWalk beta_rw;
  RandomWalk ridge_rw;
};

struct ConditionState {
  double mu_eta = 0.5, sigma_eta = 0.5, mu_beta = 0.0, sigma_beta = 0.5;
  double ridge = 0.0;
  RandomWalk mu_eta_rw, sigma_eta_rw, mu_beta_rw, sigma_beta_rw;
  // Joint moves: shift the whole group along the eta/ln beta ridge, shift the
  // ln beta group, and rescale deviations with sigma (non-centred updates).
  RandomWalk shift_rw, beta_shift_rw, eta_scale_rw, beta_scale_rw;
  std::vector<SubjectState> subjects;
};

struct ChainOutput {
  std::vector<std::vector<double>> rows;  // [param][iteration]
  std::vector<double> acceptance;         // per block
};

// Parameter layout: per condition the four population parameters, then per
// subject and condition eta and beta.
constexpr std::size_t kPopulationParams = 4;

std::size_t subject_row(std::size_t i, std::size_t c) { return 2 * kPopulationParams + 2 * (2 * i + c); }

using Evals = std::vector<std::array<std::optional<ConditionEval>, 2>>;

class IsoelasticChain {
 public:
  IsoelasticChain(const Evals& evals, const HierarchicalIsoelasticSpec& spec,
                  const SamplerConfig& cfg, std::uint64_t seed)
      : evals_(evals), spec_(spec), cfg_(cfg), rng_(seed) {}

  ChainOutput run() {
    const std::size_t n = evals_.size();
    for (std::size_t c = 0; c < 2; ++c) initialize(c);

    ChainOutput out;
    out.rows.assign(2 * kPopulationParams + 4 * n, {});
    for (auto& r : out.rows) r.reserve(static_cast<std::size_t>(cfg_.samples_per_chain));

    const int total = cfg_.burn_in + cfg_.samples_per_chain;
    for (int it = 0; it < total; ++it) {
      for (std::size_t c = 0; c < 2; ++c) sweep(c);
      const bool burning = it < cfg_.burn_in;
      if (burning && cfg_.adapt && (it + 1) % detail::kAdaptWindow == 0) {
        for_each_rw([](const char*, RandomWalk& rw) { rw.adapt(); });
      }
      if (it + 1 == cfg_.burn_in) for_each_rw([](const char*, RandomWalk& rw) { rw.reset_counts(); });
      if (!burning) record(out);
    }
    out.acceptance = acceptance();
    return out;
  }

  /// Block names in the order acceptance() reports them, per condition.
  static std::vector<const char*> block_names() {
    return {"mu_eta", "sigma_eta", "mu_beta", "sigma_beta", "group_shift",
            "beta_shift", "eta_scale", "beta_scale", "eta", "beta", "ridge"};
  }

 private:
  template <class F>
  void for_each_rw(F f) {
    for (auto& cs : cond_) {
      f("mu_eta", cs.mu_eta_rw);
      f("sigma_eta", cs.sigma_eta_rw);
      f("mu_beta", cs.mu_beta_rw);
      f("sigma_beta", cs.sigma_beta_rw);
      f("group_shift", cs.shift_rw);
      f("beta_shift", cs.beta_shift_rw);
      f("eta_scale", cs.eta_scale_rw);
      f("beta_scale", cs.beta_scale_rw);
      for (auto& s : cs.subjects) {
        f("eta", s.eta_rw);
        f("beta", s.beta_rw);
        f("ridge", s.ridge_rw);
      }
    }
  }

  bool evaluate(std::size_t i, std::size_t c, double eta, double log_beta, std::vector<double>& d,
                double& ll) {
    const ConditionEval& ev = *evals_[i][c];
    du_.resize(ev.n_stimuli());
    if (!isoelastic_utilities(ev.data(), eta, spec_.form, du_)) return false;
    ev.differences(du_, d);
    ll = ev.loglik(d, std::exp(log_beta));
    return std::isfinite(ll);
  }

  void initialize(std::size_t c) {
    ConditionState& cs = cond_[c];
    const std::size_t n = evals_.size();
    cs.subjects.assign(n, {});
    std::uniform_real_distribution<double> eta0(-0.5, 1.5);
    std::uniform_real_distribution<double> lb0(-2.3, 3.4);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxInitAttempts) {
        throw InitializationFailure("no finite starting point for condition '" +
                                    std::string(to_string(static_cast<Dynamic>(c))) + "' after " +
                                    std::to_string(kMaxInitAttempts) + " attempts");
      }
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        SubjectState& s = cs.subjects[i];
        s.eta = eta0(rng_);
        s.log_beta = lb0(rng_);
        s.ll = 0.0;
        if (evals_[i][c]) ok = evaluate(i, c, s.eta, s.log_beta, s.d, s.ll);
      }
      if (ok) break;
    }
    double me = 0.0, mb = 0.0, ridge = 0.0;
    int with_data = 0;
    for (std::size_t i = 0; i < n; ++i) {
      SubjectState& s = cs.subjects[i];
      me += s.eta;
      mb += s.log_beta;
      // Utility changes scale like wealth^(1 - eta), so ln beta trades off
      // against eta with slope ln(wealth).
      s.ridge = evals_[i][c] ? std::log(evals_[i][c]->data().wealth) : std::log(kEndowment);
      if (evals_[i][c]) {
        ridge += s.ridge;
        ++with_data;
      }
    }
    cs.ridge = with_data ? ridge / with_data : std::log(kEndowment);
    cs.mu_eta = n ? me / n : 0.5;
    cs.mu_beta = n ? mb / n : 0.55;
    cs.sigma_eta = 0.5;
    cs.sigma_beta = 0.5;
    cs.mu_eta_rw = RandomWalk(cfg_.scales.mu);
    cs.sigma_eta_rw = RandomWalk(cfg_.scales.sigma);
    cs.mu_beta_rw = RandomWalk(cfg_.scales.mu);
    cs.sigma_beta_rw = RandomWalk(cfg_.scales.sigma);
    cs.shift_rw = RandomWalk(0.02);
    cs.beta_shift_rw = RandomWalk(0.05);
    cs.eta_scale_rw = RandomWalk(0.1);
    cs.beta_scale_rw = RandomWalk(0.1);
    for (auto& s : cs.subjects) {
      s.eta_rw = RandomWalk(cfg_.scales.eta);
      s.beta_rw = RandomWalk(cfg_.scales.log_beta);
      s.ridge_rw = RandomWalk(0.05);
    }
  }

  double prior_eta(const ConditionState& cs, double eta) const {
    return detail::normal_logpdf(eta, cs.mu_eta, cs.sigma_eta);
  }
  double prior_beta(const ConditionState& cs, double lb) const {
    return detail::normal_logpdf(lb, cs.mu_beta, cs.sigma_beta);
  }

  void sweep(std::size_t c) {
    ConditionState& cs = cond_[c];
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < cs.subjects.size(); ++i) {
      SubjectState& s = cs.subjects[i];
      if (!evals_[i][c]) {
        s.eta = cs.mu_eta + cs.sigma_eta * z(rng_);
        s.log_beta = cs.mu_beta + cs.sigma_beta * z(rng_);
        continue;
      }
      // eta
      {
        const double prop = s.eta_rw.propose(s.eta, rng_);
        double ll = 0.0;
        if (evaluate(i, c, prop, s.log_beta, scratch_, ll)) {
          const double lr = ll - s.ll + prior_eta(cs, prop) - prior_eta(cs, s.eta);
          if (s.eta_rw.accept(lr, rng_)) {
            s.eta = prop;
            s.ll = ll;
            std::swap(s.d, scratch_);
          }
        } else {
          s.eta_rw.reject();
        }
      }
      // ln beta
      {
        const double prop = s.beta_rw.propose(s.log_beta, rng_);
        const double ll = evals_[i][c]->loglik(s.d, std::exp(prop));
        const double lr = ll - s.ll + prior_beta(cs, prop) - prior_beta(cs, s.log_beta);
        if (s.beta_rw.accept(lr, rng_)) {
          s.log_beta = prop;
          s.ll = ll;
        }
      }
      // eta and ln beta together along the ridge
      {
        const double e = s.ridge_rw.propose(0.0, rng_);
        const double eta = s.eta + e;
        const double lb = s.log_beta + s.ridge * e;
        double ll = 0.0;
        if (evaluate(i, c, eta, lb, scratch_, ll)) {
          const double lr = ll - s.ll + prior_eta(cs, eta) - prior_eta(cs, s.eta) +
                            prior_beta(cs, lb) - prior_beta(cs, s.log_beta);
          if (s.ridge_rw.accept(lr, rng_)) {
            s.eta = eta;
            s.log_beta = lb;
            s.ll = ll;
            std::swap(s.d, scratch_);
          }
        } else {
          s.ridge_rw.reject();
        }
      }
    }
    update_population(cs, &SubjectState::eta, cs.mu_eta, cs.sigma_eta, spec_.mu_eta,
                      spec_.sigma_eta, cs.mu_eta_rw, cs.sigma_eta_rw);
    update_population(cs, &SubjectState::log_beta, cs.mu_beta, cs.sigma_beta, spec_.mu_beta,
                      spec_.sigma_beta, cs.mu_beta_rw, cs.sigma_beta_rw);
    joint_moves(c);
  }

  // Moves every subject at once; hyperparameters change with them. Prior and
  // Jacobian terms arrive in log_extra.
  bool joint_accept(std::size_t c, RandomWalk& rw, bool eta_changed, double log_extra) {
    ConditionState& cs = cond_[c];
    const std::size_t n = cs.subjects.size();
    prop_ll_.resize(n);
    prop_d_.resize(n);
    double lr = log_extra;
    for (std::size_t i = 0; i < n; ++i) {
      if (!evals_[i][c]) continue;
      const SubjectState& s = cs.subjects[i];
      if (eta_changed) {
        if (!evaluate(i, c, prop_eta_[i], prop_lb_[i], prop_d_[i], prop_ll_[i])) {
          rw.reject();
          return false;
        }
      } else {
        prop_ll_[i] = evals_[i][c]->loglik(s.d, std::exp(prop_lb_[i]));
      }
      lr += prop_ll_[i] - s.ll;
    }
    if (!rw.accept(lr, rng_)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      SubjectState& s = cs.subjects[i];
      s.eta = prop_eta_[i];
      s.log_beta = prop_lb_[i];
      if (!evals_[i][c]) continue;
      s.ll = prop_ll_[i];
      if (eta_changed) std::swap(s.d, prop_d_[i]);
    }
    return true;
  }

  double prior_sum(const ConditionState& cs, double mu_e, double sd_e, double mu_b,
                   double sd_b) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < cs.subjects.size(); ++i) {
      lp += detail::normal_logpdf(prop_eta_[i], mu_e, sd_e) +
            detail::normal_logpdf(prop_lb_[i], mu_b, sd_b);
    }
    return lp;
  }

  double current_prior_sum(const ConditionState& cs) const {
    double lp = 0.0;
    for (const auto& s : cs.subjects) lp += prior_eta(cs, s.eta) + prior_beta(cs, s.log_beta);
    return lp;
  }

  void joint_moves(std::size_t c) {
    ConditionState& cs = cond_[c];
    const std::size_t n = cs.subjects.size();
    const double dn = static_cast<double>(n);
    prop_eta_.resize(n);
    prop_lb_.resize(n);

    // Group shift along the ridge.
    {
      const double e = cs.shift_rw.propose(0.0, rng_);
      const double mu_e = cs.mu_eta + e, mu_b = cs.mu_beta + cs.ridge * e;
      if (spec_.mu_eta.contains(mu_e) && spec_.mu_beta.contains(mu_b)) {
        for (std::size_t i = 0; i < n; ++i) {
          prop_eta_[i] = cs.subjects[i].eta + e;
          prop_lb_[i] = cs.subjects[i].log_beta + cs.ridge * e;
        }
        if (joint_accept(c, cs.shift_rw, true, 0.0)) {
          cs.mu_eta = mu_e;
          cs.mu_beta = mu_b;
        }
      } else {
        cs.shift_rw.reject();
      }
    }
    // ln beta group shift.
    {
      const double e = cs.beta_shift_rw.propose(0.0, rng_);
      const double mu_b = cs.mu_beta + e;
      if (spec_.mu_beta.contains(mu_b)) {
        for (std::size_t i = 0; i < n; ++i) {
          prop_eta_[i] = cs.subjects[i].eta;
          prop_lb_[i] = cs.subjects[i].log_beta + e;
        }
        if (joint_accept(c, cs.beta_shift_rw, false, 0.0)) cs.mu_beta = mu_b;
      } else {
        cs.beta_shift_rw.reject();
      }
    }
    // Rescale eta deviations with sigma_eta, ln beta following the ridge.
    {
      const double e = cs.eta_scale_rw.propose(0.0, rng_);
      const double sd = cs.sigma_eta * std::exp(e);
      if (spec_.sigma_eta.contains(sd)) {
        for (std::size_t i = 0; i < n; ++i) {
          const SubjectState& s = cs.subjects[i];
          prop_eta_[i] = cs.mu_eta + (s.eta - cs.mu_eta) * std::exp(e);
          prop_lb_[i] = s.log_beta + s.ridge * (prop_eta_[i] - s.eta);
        }
        const double extra = prior_sum(cs, cs.mu_eta, sd, cs.mu_beta, cs.sigma_beta) -
                             current_prior_sum(cs) + (dn + 1.0) * e;
        if (joint_accept(c, cs.eta_scale_rw, true, extra)) cs.sigma_eta = sd;
      } else {
        cs.eta_scale_rw.reject();
      }
    }
    // Rescale ln beta deviations with sigma_beta.
    {
      const double e = cs.beta_scale_rw.propose(0.0, rng_);
      const double sd = cs.sigma_beta * std::exp(e);
      if (spec_.sigma_beta.contains(sd)) {
        for (std::size_t i = 0; i < n; ++i) {
          const SubjectState& s = cs.subjects[i];
          prop_eta_[i] = s.eta;
          prop_lb_[i] = cs.mu_beta + (s.log_beta - cs.mu_beta) * std::exp(e);
        }
        const double extra = prior_sum(cs, cs.mu_eta, cs.sigma_eta, cs.mu_beta, sd) -
                             current_prior_sum(cs) + (dn + 1.0) * e;
        if (joint_accept(c, cs.beta_scale_rw, false, extra)) cs.sigma_beta = sd;
      } else {
        cs.beta_scale_rw.reject();
      }
    }
    if (!spec_.mu_eta.contains(cs.mu_eta) || !spec_.sigma_eta.contains(cs.sigma_eta) ||
        !spec_.mu_beta.contains(cs.mu_beta) || !spec_.sigma_beta.contains(cs.sigma_beta)) {
      throw std::logic_error("hyperparameter left its support");
    }
  }

  void update_population(const ConditionState& cs, double SubjectState::*field, double& mu,
                         double& sigma, const Support& mu_support, const Support& sigma_support,
                         RandomWalk& mu_rw, RandomWalk& sigma_rw) {
    const double n = static_cast<double>(cs.subjects.size());
    double s1 = 0.0, s2 = 0.0;
    for (const auto& s : cs.subjects) {
      s1 += s.*field;
      s2 += (s.*field) * (s.*field);
    }
    const double mu_prop = mu_rw.propose(mu, rng_);
    if (mu_support.contains(mu_prop)) {
      const double lr = detail::normal_loglik_sum(n, s1, s2, mu_prop, sigma) -
                        detail::normal_loglik_sum(n, s1, s2, mu, sigma);
      if (mu_rw.accept(lr, rng_)) mu = mu_prop;
    } else {
      mu_rw.reject();
    }
    const double sigma_prop = sigma_rw.propose(sigma, rng_);
    if (sigma_support.contains(sigma_prop)) {
      const double lr = detail::normal_loglik_sum(n, s1, s2, mu, sigma_prop) -
                        detail::normal_loglik_sum(n, s1, s2, mu, sigma);
      if (sigma_rw.accept(lr, rng_)) sigma = sigma_prop;
    } else {
      sigma_rw.reject();
    }
  }

  void record(ChainOutput& out) const {
    for (std::size_t c = 0; c < 2; ++c) {
      const ConditionState& cs = cond_[c];
      const std::size_t base = c * kPopulationParams;
      out.rows[base + 0].push_back(cs.mu_eta);
      out.rows[base + 1].push_back(cs.sigma_eta);
      out.rows[base + 2].push_back(cs.mu_beta);
      out.rows[base + 3].push_back(cs.sigma_beta);
      for (std::size_t i = 0; i < cs.subjects.size(); ++i) {
        out.rows[subject_row(i, c)].push_back(cs.subjects[i].eta);
        out.rows[subject_row(i, c) + 1].push_back(std::exp(cs.subjects[i].log_beta));
      }
    }
  }

  // Acceptance per block name and condition; subject blocks are pooled.
  std::vector<double> acceptance() {
    const auto names = block_names();
    std::vector<double> acc;
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<long> a(names.size(), 0), p(names.size(), 0);
      auto tally = [&](const char* name, RandomWalk& rw) {
        for (std::size_t b = 0; b < names.size(); ++b) {
          if (std::string_view(names[b]) == name) {
            a[b] += rw.accepted();
            p[b] += rw.proposals();
          }
        }
      };
      ConditionState& cs = cond_[c];
      tally("mu_eta", cs.mu_eta_rw);
      tally("sigma_eta", cs.sigma_eta_rw);
      tally("mu_beta", cs.mu_beta_rw);
      tally("sigma_beta", cs.sigma_beta_rw);
      tally("group_shift", cs.shift_rw);
      tally("beta_shift", cs.beta_shift_rw);
      tally("eta_scale", cs.eta_scale_rw);
      tally("beta_scale", cs.beta_scale_rw);
      for (auto& s : cs.subjects) {
        tally("eta", s.eta_rw);
        tally("beta", s.beta_rw);
        tally("ridge", s.ridge_rw);
      }
      for (std::size_t b = 0; b < names.size(); ++b) {
        acc.push_back(p[b] ? static_cast<double>(a[b]) / p[b] : 0.0);
      }
    }
    return acc;
  }

  const Evals& evals_;
  const HierarchicalIsoelasticSpec& spec_;
  const SamplerConfig& cfg_;
  std::mt19937_64 rng_;
  std::array<ConditionState, 2> cond_;
  std::vector<double> du_, scratch_;
  std::vector<double> prop_eta_, prop_lb_, prop_ll_;
  std::vector<std::vector<double>> prop_d_;
};

}  // namespace

PosteriorChains sample_posterior(std::span<const SubjectDataset> data,
                                 const HierarchicalIsoelasticSpec& spec, const SamplerConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("sample_posterior needs at least one subject");
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

  PosteriorChains post;
  post.chains = cfg.chains;
  post.samples = cfg.samples_per_chain;
  post.seed = cfg.seed;
  for (Dynamic d : kDynamics) {
    for (const char* p : {"mu_eta", "sigma_eta", "mu_beta", "sigma_beta"}) {
      post.names.push_back(population_param(p, d));
    }
  }
  for (const auto& s : data) {
    for (Dynamic d : kDynamics) {
      post.names.push_back(subject_param("eta", s.id, d));
      post.names.push_back(subject_param("beta", s.id, d));
    }
  }

  std::vector<ChainOutput> outs(static_cast<std::size_t>(cfg.chains));
  parallel_for(outs.size(), cfg.exec, [&](std::size_t k) {
    IsoelasticChain chain(evals, spec, cfg, mix_seed(cfg.seed, k));
    outs[k] = chain.run();
  });

  post.draws.assign(post.names.size(), {});
  for (std::size_t p = 0; p < post.names.size(); ++p) {
    auto& row = post.draws[p];
    row.reserve(static_cast<std::size_t>(cfg.chains) * cfg.samples_per_chain);
    for (const auto& o : outs) row.insert(row.end(), o.rows[p].begin(), o.rows[p].end());
  }

  const auto blocks = IsoelasticChain::block_names();
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      double sum = 0.0;
      for (const auto& o : outs) sum += o.acceptance[c * blocks.size() + b];
      post.acceptance.emplace_back(population_param(blocks[b], static_cast<Dynamic>(c)),
                                   sum / cfg.chains);
    }
  }
  return post;
}

double compute_rhat(std::span<const std::span<const double>> chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("R-hat needs at least two chains");
  const std::size_t n = chains[0].size();
  if (n < 10) throw std::invalid_argument("R-hat needs at least 10 draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("R-hat chains differ in length");
  }
  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double mean = std::accumulate(chains[j].begin(), chains[j].end(), 0.0) / n;
    double ss = 0.0;
    for (double x : chains[j]) ss += (x - mean) * (x - mean);
    means[j] = mean;
    w += ss / (n - 1);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / (m - 1);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt((w + b / n) / w);
}

double compute_rhat(const PosteriorChains& post, std::size_t param) {
  std::vector<std::span<const double>> cs;
  for (int c = 0; c < post.chains; ++c) cs.push_back(post.chain(param, c));
  return compute_rhat(cs);
}

double percentile(std::span<const double> draws, double q) {
  if (draws.empty()) throw std::invalid_argument("percentile of no draws");
  std::vector<double> v(draws.begin(), draws.end());
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

std::pair<double, double> central_interval(std::span<const double> draws, double mass) {
  const double tail = 0.5 * (1.0 - mass);
  return {percentile(draws, tail), percentile(draws, 1.0 - tail)};
}

double map_estimate(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n == 0) throw std::invalid_argument("MAP of no draws");
  const auto [mn_it, mx_it] = std::minmax_element(draws.begin(), draws.end());
  const double lo = *mn_it, hi = *mx_it;
  if (lo == hi) return lo;

  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : draws) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n > 1 ? n - 1 : 1));
  const double iqr = percentile(draws, 0.75) - percentile(draws, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  constexpr int kGrid = 4096;
  const double g0 = lo - 3.0 * h, g1 = hi + 3.0 * h;
  const double dx = (g1 - g0) / (kGrid - 1);

  // Linear binning, then convolution with the sampled Gaussian kernel.
  std::vector<double> counts(kGrid, 0.0);
  for (double x : draws) {
    const double pos = (x - g0) / dx;
    const auto k = std::min(static_cast<int>(pos), kGrid - 2);
    const double frac = pos - k;
    counts[k] += 1.0 - frac;
    counts[k + 1] += frac;
  }
  const int reach = std::min(kGrid - 1, static_cast<int>(std::ceil(5.0 * h / dx)));
  std::vector<double> kernel(reach + 1);
  for (int j = 0; j <= reach; ++j) {
    const double u = j * dx / h;
    kernel[j] = std::exp(-0.5 * u * u);
  }
  int best = 0;
  double best_density = -1.0;
  for (int g = 0; g < kGrid; ++g) {
    double dens = counts[g] * kernel[0];
    const int jmax = std::min(reach, std::max(g, kGrid - 1 - g));
    for (int j = 1; j <= jmax; ++j) {
      if (g - j >= 0) dens += counts[g - j] * kernel[j];
      if (g + j < kGrid) dens += counts[g + j] * kernel[j];
    }
    if (dens > best_density) {
      best_density = dens;
      best = g;
    }
  }
  return g0 + best * dx;
}

ParameterSummary summarize(const PosteriorChains& post, std::size_t param) {
  const auto draws = post.pooled(param);
  ParameterSummary s;
  s.name = post.names.at(param);
  const double n = static_cast<double>(draws.size());
  s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : draws) ss += (x - s.mean) * (x - s.mean);
  s.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  s.map = map_estimate(draws);
  std::tie(s.lo95, s.hi95) = central_interval(draws);
  s.rhat = (post.chains >= 2 && post.samples >= 10) ? compute_rhat(post, param)
                                                    : std::numeric_limits<double>::quiet_NaN();
  return s;
}

std::vector<ParameterSummary> summarize(const PosteriorChains& post) {
  std::vector<ParameterSummary> out;
  out.reserve(post.size());
  for (std::size_t p = 0; p < post.size(); ++p) out.push_back(summarize(post, p));
  return out;
}

std::vector<double> pooled_subject_draws(const PosteriorChains& post, std::string_view name,
                                         Dynamic d) {
  const std::string prefix = std::string(name) + "[";
  const std::string suffix = "][" + std::string(to_string(d)) + "]";
  std::vector<double> out;
  for (std::size_t p = 0; p < post.size(); ++p) {
    const std::string& n = post.names[p];
    if (n.size() > prefix.size() + suffix.size() && n.compare(0, prefix.size(), prefix) == 0 &&
        n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.insert(out.end(), post.draws[p].begin(), post.draws[p].end());
    }
  }
  return out;
}

double max_population_rhat(const PosteriorChains& post) {
  double worst = 1.0;
  for (std::size_t p = 0; p < post.size(); ++p) {
    const std::string& n = post.names[p];
    if (std::count(n.begin(), n.end(), '[') != 1) continue;
    worst = std::max(worst, compute_rhat(post, p));
  }
  return worst;
}

}  // namespace ergo
