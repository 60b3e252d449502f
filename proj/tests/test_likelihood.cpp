#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <catch_amalgamated.hpp>

#include "ergo/agents.hpp"
#include "ergo/likelihood.hpp"

using namespace ergo;
using Catch::Approx;

namespace {

// Trial-by-trial Bernoulli log likelihood straight from the choice rule.
double direct_log_likelihood(const ConditionData& c, const UtilityModelSpec& model, double beta) {
  double ll = 0.0;
  for (const auto& t : c.trials) {
    if (t.choice == Choice::Timeout) continue;
    const double x = beta * utility_difference(t.pair, model, c.wealth);
    const double p = std::clamp(1.0 / (1.0 + std::exp(t.choice == Choice::Left ? -x : x)),
                                kThetaFloor, 1.0 - kThetaFloor);
    ll += std::log(p);
  }
  return ll;
}

SubjectDataset noisy_subject(Dynamic d, std::uint64_t seed, double wealth) {
  const AgentConfig a = uniform_agent("x", IsoelasticParams{0.6}, d == Dynamic::Additive ? 0.02 : 4.0,
                                      {wealth});
  auto data = simulate_choices(
      a, make_schedule(build_gamble_space(build_stimulus_set(d), seed), seed), seed);
  // sprinkle timeouts
  auto& trials = data.condition(d)->trials;
  for (std::size_t i = 0; i < trials.size(); i += 17) trials[i].choice = Choice::Timeout;
  return data;
}

}  // namespace

TEST_CASE("compiled likelihood equals direct summation", "[likelihood]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> eta(-1.0, 2.0), lb(-2.3, 3.4), wealth(600.0, 3000.0);
  for (int rep = 0; rep < 40; ++rep) {
    const Dynamic d = rep % 2 ? Dynamic::Multiplicative : Dynamic::Additive;
    const SubjectDataset s = noisy_subject(d, 100 + rep, wealth(rng));
    const ConditionData& c = *s.condition(d);
    for (int k = 0; k < 5; ++k) {
      const double e = k == 0 ? 1.0 : eta(rng), b = std::exp(lb(rng));
      for (IsoelasticForm form : {IsoelasticForm::UtilityDifference, IsoelasticForm::Marginal}) {
        const double fast = log_likelihood(s, e, b, d, form);
        const double slow = direct_log_likelihood(c, IsoelasticParams{e, form}, b);
        CHECK(fast == Approx(slow).epsilon(1e-10).margin(1e-9));
      }
    }
    const CompiledCondition cc = compile_condition(c);
    int answered = 0;
    for (const auto& t : c.trials) answered += t.choice != Choice::Timeout;
    CHECK(cc.n_choices == answered);
    int counted = 0;
    for (const auto& p : cc.pairs) counted += p.n_left + p.n_right;
    CHECK(counted == answered);
    CHECK(cc.pairs.size() <= 144 + 24);
  }
}

TEST_CASE("likelihood for other models", "[likelihood]") {
  const SubjectDataset s = noisy_subject(Dynamic::Multiplicative, 7, 1000);
  const CompiledCondition cc = compile_condition(*s.condition(Dynamic::Multiplicative));
  for (const UtilityModelSpec& m : {UtilityModelSpec{ProspectTheoryParams{0.7, 0.8, 2.0}},
                                    UtilityModelSpec{TimeOptimalParams{}}}) {
    std::vector<double> du(cc.stimuli.size());
    REQUIRE(model_utilities(cc, m, du));
    CHECK(choice_log_likelihood(cc, du, 0.3) ==
          Approx(direct_log_likelihood(*s.condition(Dynamic::Multiplicative), m, 0.3)).epsilon(1e-10));
  }
}

TEST_CASE("likelihood edge cases", "[likelihood]") {
  SubjectDataset s = noisy_subject(Dynamic::Additive, 3, 1000.0);
  s.condition(Dynamic::Additive)->wealth = {300.0};  // 300 - 428 < 0
  CHECK(log_likelihood(s, 0.5, 1.0, Dynamic::Additive) == -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(log_likelihood(s, 0.0, 1.0, Dynamic::Additive)));
  CHECK(log_likelihood(s, 0.5, 1.0, Dynamic::Multiplicative) == 0.0);

  // a confidently wrong choice costs at most -ln(kThetaFloor)
  const SubjectDataset t = noisy_subject(Dynamic::Additive, 4, 1000.0);
  CHECK(log_likelihood(t, 0.0, 1e6, Dynamic::Additive) >=
        std::log(kThetaFloor) * static_cast<double>(t.condition(Dynamic::Additive)->trials.size()));

  // zero sensitivity: every answered choice is a coin flip
  const auto& trials = t.condition(Dynamic::Additive)->trials;
  int answered = 0;
  for (const auto& tr : trials) answered += tr.choice != Choice::Timeout;
  CHECK(log_likelihood(t, 0.3, 0.0, Dynamic::Additive) == Approx(answered * std::log(0.5)));
}
