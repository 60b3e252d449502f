#include "ergo/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace ergo {

std::string to_string(Choice c) {
  switch (c) {
    case Choice::Left: return "left";
    case Choice::Right: return "right";
    case Choice::Timeout: return "timeout";
  }
  return "timeout";
}

Choice choice_from_string(const std::string& s) {
  if (s == "left") return Choice::Left;
  if (s == "right") return Choice::Right;
  if (s == "timeout") return Choice::Timeout;
  throw std::invalid_argument("unknown choice '" + s + "'");
}

AgentConfig uniform_agent(std::string id, const UtilityModelSpec& model, double beta,
                          WealthState wealth) {
  AgentConfig a;
  a.id = std::move(id);
  for (auto& c : a.conditions) c = ConditionAgent{model, beta, wealth};
  return a;
}

double calibrated_sensitivity(const UtilityModelSpec& model, Dynamic d, WealthState w,
                              double target, bool clamp_to_prior) {
  const GambleSpace space = build_gamble_space(build_stimulus_set(d));
  std::vector<double> mag;
  mag.reserve(space.core.size());
  for (const auto& p : space.core) mag.push_back(std::abs(utility_difference(p, model, w)));
  const auto mid = mag.begin() + static_cast<std::ptrdiff_t>(mag.size() / 2);
  std::nth_element(mag.begin(), mid, mag.end());
  if (!(*mid > 0.0)) throw std::domain_error("model makes no distinctions between core pairs");
  double log_beta = std::log(target / *mid);
  if (clamp_to_prior) log_beta = std::clamp(log_beta, kMinLogBeta, kMaxLogBeta);
  return std::exp(log_beta);
}

SubjectDataset simulate_choices(const AgentConfig& agent, const Schedule& sched,
                                std::uint64_t seed) {
  SubjectDataset out;
  out.id = agent.id;
  if (sched.trials.empty()) return out;
  const Dynamic d = sched.trials.front().dynamic();
  const ConditionAgent& cfg = agent[d];

  ConditionData cond;
  cond.dynamic = d;
  cond.wealth = cfg.wealth;
  cond.trials.reserve(sched.trials.size());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& pair : sched.trials) {
    Trial t{pair};
    t.delta_u = utility_difference(pair, cfg.model, cfg.wealth);
    t.theta = choice_probability(t.delta_u, cfg.beta);
    t.choice = unif(rng) < t.theta ? Choice::Left : Choice::Right;
    cond.trials.push_back(std::move(t));
  }
  out.conditions[index_of(d)] = std::move(cond);
  return out;
}

SubjectDataset simulate_subject(const AgentConfig& agent, const Schedule& additive,
                                const Schedule& multiplicative, std::uint64_t seed) {
  SubjectDataset out = simulate_choices(agent, additive, mix_seed(seed, 0));
  SubjectDataset mult = simulate_choices(agent, multiplicative, mix_seed(seed, 1));
  out.conditions[1] = std::move(mult.conditions[1]);
  return out;
}

double Trajectory::growth_rate() const {
  if (level.size() < 2) throw std::invalid_argument("trajectory has no trials");
  return (level.back() - level.front()) / static_cast<double>(trials());
}

Trajectory simulate_trajectory(const ConditionAgent& agent, Dynamic d, std::int64_t horizon,
                               std::uint64_t seed, WealthState start) {
  if (horizon < 1) throw std::invalid_argument("trajectory horizon must be >= 1");
  const StimulusSet set = build_stimulus_set(d);
  const GambleSpace space = build_gamble_space(set);
  const auto& pairs = space.core;

  std::vector<double> theta(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    theta[i] = choice_probability(utility_difference(pairs[i], agent.model, agent.wealth),
                                  agent.beta);
  }

  Trajectory traj;
  traj.dynamic = d;
  traj.level.reserve(static_cast<std::size_t>(horizon) + 1);
  if (d == Dynamic::Multiplicative) {
    if (!(start.amount > 0.0)) throw std::domain_error("multiplicative start wealth must be > 0");
    traj.level.push_back(std::log(start.amount));
  } else {
    traj.level.push_back(start.amount);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double level = traj.level.front();
  for (std::int64_t t = 0; t < horizon; ++t) {
    const std::size_t k = pick(rng);
    const double u_choice = unif(rng);
    const double u_coin = unif(rng);
    const Gamble& g = u_choice < theta[k] ? pairs[k].left : pairs[k].right;
    const StimulusOutcome& s = u_coin < 0.5 ? g.first() : g.second();
    level += s.growth_contribution();
    if (d == Dynamic::Additive && level < 0.0) traj.went_negative = true;
    traj.level.push_back(level);
  }
  return traj;
}

std::vector<NamedAgent> synthetic_agent_roster(double beta) {
  std::vector<NamedAgent> roster;
  for (double lambda : {1.0, 2.0, 3.0}) {
    for (double alpha : {0.3, 0.6, 0.9}) {
      char name[48];
      std::snprintf(name, sizeof(name), "pt_a%.1f_l%.0f", alpha, lambda);
      roster.push_back({name, uniform_agent(name, ProspectTheoryParams{alpha, alpha, lambda}, beta)});
    }
  }
  roster.push_back({"iso_eta0", uniform_agent("iso_eta0", IsoelasticParams{0.0}, beta)});
  roster.push_back({"iso_eta1", uniform_agent("iso_eta1", IsoelasticParams{1.0}, beta)});
  roster.push_back({"time_optimal", uniform_agent("time_optimal", TimeOptimalParams{}, beta)});
  return roster;
}

std::vector<Trajectory> simulate_roster(std::span<const NamedAgent> agents, Dynamic d,
                                        std::int64_t horizon, std::uint64_t seed, Execution exec) {
  std::vector<Trajectory> out(agents.size());
  parallel_for(agents.size(), exec, [&](std::size_t i) {
    out[i] = simulate_trajectory(agents[i].config[d], d, horizon, seed);
  });
  return out;
}

}  // namespace ergo
