#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <json.hpp>

#include <catch_amalgamated.hpp>

#include "ergo/agents.hpp"
#include "ergo/stats.hpp"

using namespace ergo;
using Catch::Approx;

namespace {

Alternative side_from(const std::string& s) {
  if (s == "greater") return Alternative::Greater;
  if (s == "less") return Alternative::Less;
  return Alternative::TwoSided;
}

// Two-sided default Bayes factor written over g, the variance of the effect:
// delta | g ~ N(0, g), g ~ InvGamma(1/2, r^2/2).
double bf_g_form(double t, int n, double r) {
  const double nu = n - 1.0;
  auto f = [&](double g) {
    const double a = 1.0 + n * g;
    const double ratio = (1.0 + t * t / (a * nu)) / (1.0 + t * t / nu);
    const double prior = r / std::sqrt(2.0 * std::numbers::pi) * std::pow(g, -1.5) * std::exp(-r * r / (2.0 * g));
    return std::pow(a, -0.5) * std::pow(ratio, -(nu + 1.0) / 2.0) * prior;
  };
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

// Tau-b over all pairs.
std::optional<double> kendall_brute(const std::vector<double>& x, const std::vector<double>& y) {
  std::int64_t c = 0, d = 0, tx = 0, ty = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = (x[i] - x[j]) * (y[i] - y[j]);
      if (x[i] == x[j]) ++tx;
      if (y[i] == y[j]) ++ty;
      if (a > 0) ++c;
      if (a < 0) ++d;
    }
  }
  const std::int64_t n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
  if (tx == n0 || ty == n0) return std::nullopt;
  return static_cast<double>(c - d) / std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

SubjectDataset agent_run(Dynamic d, const UtilityModelSpec& m, double beta, std::uint64_t seed) {
  const auto a = uniform_agent("a", m, beta, {1000.0});
  return simulate_choices(a, make_schedule(build_gamble_space(build_stimulus_set(d), seed), seed), seed);
}

}  // namespace

TEST_CASE("default Bayes factor matches the frozen quadrature oracle", "[stats]") {
  std::ifstream in(ERGO_TEST_DATA "/jzs_oracle.json");
  REQUIRE(in);
  const auto doc = nlohmann::json::parse(in);
  REQUIRE(doc["cases"].size() == 50);
  for (const auto& c : doc["cases"]) {
    const auto samples = c["samples"].get<std::vector<double>>();
    const auto r = jzs_bf_ttest(samples, c["null"].get<double>(), side_from(c["side"]),
                                c["scale"].get<double>());
    INFO("n " << samples.size() << " side " << c["side"] << " scale " << c["scale"]);
    CHECK(r.t == Approx(c["t"].get<double>()).epsilon(1e-10));
    CHECK(r.bf == Approx(c["bf"].get<double>()).epsilon(1e-3));
  }
}

TEST_CASE("two-sided Bayes factor agrees with the g-prior form", "[stats]") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> ut(-6.0, 6.0);
  std::uniform_int_distribution<int> un(3, 200);
  for (int rep = 0; rep < 100; ++rep) {
    const double t = ut(rng);
    const int n = un(rng);
    for (double r : {kDefaultCauchyScale, 1.0, std::numbers::sqrt2}) {
      CHECK(jzs_bf_from_t(t, n, Alternative::TwoSided, r) == Approx(bf_g_form(t, n, r)).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: Bayes factor identities", "[stats]") {
  std::mt19937 rng(22);
  std::normal_distribution<double> z(0.3, 1.0);
  std::uniform_real_distribution<double> ua(0.01, 50.0), ub(-100.0, 100.0);
  for (int rep = 0; rep < 18; ++rep) {
    std::vector<double> x(5 + 2 * rep);
    for (double& v : x) v = z(rng);
    const double scale = rep % 3 == 0 ? kDefaultCauchyScale : (rep % 3 == 1 ? 1.0 : std::numbers::sqrt2);
    for (Alternative side : {Alternative::TwoSided, Alternative::Greater, Alternative::Less}) {
      const auto r = jzs_bf_ttest(x, 0.0, side, scale);
      CHECK(r.bf * r.bf01() == Approx(1.0).margin(1e-9));
      CHECK(r.bf > 0.0);
      // affine maps of the data (and the null) leave t and the BF unchanged
      const double a = ua(rng), b = ub(rng);
      std::vector<double> y(x.size());
      std::transform(x.begin(), x.end(), y.begin(), [&](double v) { return a * v + b; });
      CHECK(jzs_bf_ttest(y, b, side, scale).bf == Approx(r.bf).epsilon(1e-6));
    }
    // mirror: "greater" on x is "less" on -x
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    CHECK(jzs_bf_ttest(neg, 0.0, Alternative::Less, scale).bf ==
          Approx(jzs_bf_ttest(x, 0.0, Alternative::Greater, scale).bf).epsilon(1e-9));
    // two-sided is the average of the two halves
    const double g = jzs_bf_ttest(x, 0.0, Alternative::Greater, scale).bf;
    const double l = jzs_bf_ttest(x, 0.0, Alternative::Less, scale).bf;
    CHECK(jzs_bf_ttest(x, 0.0, Alternative::TwoSided, scale).bf == Approx(0.5 * (g + l)).epsilon(1e-8));
  }
}

TEST_CASE("Bayes factor summaries and errors", "[stats]") {
  const std::vector<double> x{1.2, 0.8, 1.5, 0.9, 1.1, 1.3, 0.7, 1.0};
  const std::vector<double> y{0.1, 0.2, 0.0, 0.3, 0.1, 0.2, 0.1, 0.0};
  const auto r = jzs_bf_paired(x, y, Alternative::Greater);
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  CHECK(r.bf == jzs_bf_ttest(d, 0.0, Alternative::Greater).bf);
  CHECK(r.bf > 100.0);
  CHECK(r.lo95 < r.posterior_median);
  CHECK(r.posterior_median < r.hi95);
  CHECK(r.lo95 >= 0.0);  // truncated prior
  CHECK(jzs_bf_from_t(0.0, 30) < 1.0);
  CHECK_THROWS_AS(jzs_bf_ttest(std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(jzs_bf_ttest(std::vector<double>{1.0, 1.0}), std::domain_error);
  CHECK_THROWS_AS(jzs_bf_from_t(1.0, 10, Alternative::TwoSided, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(jzs_bf_paired(x, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("Kendall tau equals brute force", "[stats]") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> small(0, 4), len(2, 8);
  int tied = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(len(rng)), y(x.size());
    for (double& v : x) v = small(rng);
    for (double& v : y) v = small(rng);
    const auto fast = kendall_tau(x, y);
    const auto slow = kendall_brute(x, y);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      CHECK(*fast == *slow);
    } else {
      ++tied;
    }
  }
  CHECK(tied < 200);
  CHECK(*kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == -1.0);
  CHECK_FALSE(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}));
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 2}, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("property: Kendall tau ignores monotone transforms", "[stats]") {
  std::mt19937 rng(24);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(3 + rep % 50), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::round(z(rng) * 4);
      y[i] = x[i] + z(rng);
    }
    const auto base = kendall_tau(x, y);
    std::vector<double> ex(x.size());
    std::transform(x.begin(), x.end(), ex.begin(), [](double v) { return std::exp(v) + 7.0; });
    CHECK(kendall_tau(ex, y) == base);
    CHECK(kendall_tau(y, x) == base);
    if (base) CHECK(*kendall_tau(ex, y) == Approx(*kendall_brute(x, y)).epsilon(1e-15));
  }
}

TEST_CASE("Wilcoxon exact distribution equals enumeration", "[stats]") {
  std::mt19937 rng(25);
  std::uniform_int_distribution<int> len(2, 12), mag(1, 6);
  for (int rep = 0; rep < 60; ++rep) {
    std::vector<double> d(len(rng));
    for (double& v : d) v = mag(rng) * (rng() % 2 ? 1.0 : -1.0);  // plenty of ties
    // midranks of |d|
    std::vector<double> ranks(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      double below = 0, equal = 0;
      for (double w : d) {
        below += std::abs(w) < std::abs(d[i]);
        equal += std::abs(w) == std::abs(d[i]);
      }
      ranks[i] = below + (equal + 1) / 2;
    }
    const std::size_t n = d.size();
    std::vector<double> sums;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1u) s += ranks[i];
      }
      sums.push_back(s);
    }
    for (double v : sums) {
      const double frac = static_cast<double>(std::count_if(sums.begin(), sums.end(),
                                                            [&](double s) { return s <= v; })) /
                          static_cast<double>(sums.size());
      CHECK(wilcoxon_exact_cdf(ranks, v) == Approx(frac).epsilon(1e-14));
    }
    const auto w = wilcoxon_signed_rank(d);
    double v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] > 0) v += ranks[i];
    }
    CHECK(w.v == v);
    CHECK(w.exact);
    const double lo = std::count_if(sums.begin(), sums.end(), [&](double s) { return s <= v; }) /
                      static_cast<double>(sums.size());
    const double hi = std::count_if(sums.begin(), sums.end(), [&](double s) { return s >= v; }) /
                      static_cast<double>(sums.size());
    CHECK(w.p == Approx(std::min(1.0, 2 * std::min(lo, hi))).epsilon(1e-14));
  }
}

TEST_CASE("Wilcoxon examples", "[stats]") {
  std::vector<double> pos(17);
  for (int i = 0; i < 17; ++i) pos[i] = 0.1 * (i + 1);
  const auto r = wilcoxon_signed_rank(pos);
  CHECK(r.v == 153.0);
  CHECK(r.p == Approx(2.0 / 131072.0).epsilon(1e-12));  // 2 / 2^17

  const std::vector<double> with_zero{0.0, 1.0, -2.0, 3.0};
  CHECK(wilcoxon_signed_rank(with_zero).n == 3);
  CHECK(wilcoxon_signed_rank(std::vector<double>{2.0, 3.0, 4.0}, 2.0).n == 2);

  std::vector<double> big(40);
  std::mt19937 rng(26);
  std::normal_distribution<double> z(0.5, 1.0);
  for (double& v : big) v = z(rng);
  const auto b = wilcoxon_signed_rank(big);
  CHECK_FALSE(b.exact);
  CHECK((b.p > 0.0 && b.p <= 1.0));
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{0.0, 1.0}), std::domain_error);
}

TEST_CASE("distances to the model predictions", "[stats]") {
  CHECK(distance_to_models(0.0, 1.0).d_time == 0.0);
  CHECK(distance_to_models(0.7, 0.7).d_invariant == 0.0);
  CHECK(distance_to_models(0.0, 1.0).d_invariant == Approx(std::sqrt(0.5)));
  CHECK(distance_to_models(0.3, 0.4).d_time == Approx(std::hypot(0.3, 0.6)));
  std::mt19937 rng(27);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), m = u(rng);
    const auto d = distance_to_models(a, m);
    CHECK(d.d_time > 0.0);
    CHECK(d.d_invariant > 0.0);
    CHECK(d.d_invariant <= d.d_time + std::sqrt(0.5) + 1e-12);  // triangle inequality via (0, 1)
  }
}

TEST_CASE("choice proportions on discrepant trials", "[stats]") {
  for (Dynamic d : kDynamics) {
    const auto log_agent = agent_run(d, IsoelasticParams{1.0}, 1e4, 5);
    const auto cp = choice_proportion_log(log_agent, d);
    REQUIRE(cp.cp_log);
    CHECK(*cp.cp_log == 1.0);
    CHECK(cp.n_discrepant == (d == Dynamic::Additive ? 12 : 36));

    const auto lin = agent_run(d, IsoelasticParams{0.0}, 1e4, 5);
    CHECK(*choice_proportion_log(lin, d).cp_log == 0.0);

    int n_log = 0, n_ans = 0;
    for (std::uint64_t s = 1; s <= 40; ++s) {
      const auto c = choice_proportion_log(agent_run(d, IsoelasticParams{1.0}, 0.0, s), d);
      n_log += c.n_log;
      n_ans += c.n_answered;
    }
    const double se = std::sqrt(0.25 / n_ans);
    CHECK(std::abs(static_cast<double>(n_log) / n_ans - 0.5) < 4 * se);

    CHECK_FALSE(choice_proportion_log(log_agent, d == Dynamic::Additive ? Dynamic::Multiplicative
                                                                          : Dynamic::Additive)
                    .cp_log);
  }
}

TEST_CASE("session growth", "[stats]") {
  for (Dynamic d : kDynamics) {
    double diff = 0.0, spread = 0.0;
    constexpr int kSeeds = 30;
    for (std::uint64_t s = 1; s <= kSeeds; ++s) {
      const auto run = agent_run(d, IsoelasticParams{1.0}, 0.0, s);
      const auto& c = *run.condition(d);
      const double g = session_growth(c) - schedule_mean_growth(c);
      diff += g;
      spread += g * g;
    }
    const double mean = diff / kSeeds;
    const double se = std::sqrt((spread / kSeeds - mean * mean) / kSeeds);
    CHECK(std::abs(mean) < 4 * se + 1e-12);

    const auto opt = agent_run(d, TimeOptimalParams{}, 1e4, 1);
    const auto& c = *opt.condition(d);
    CHECK(session_growth(c) > schedule_mean_growth(c));
  }
}

TEST_CASE("growth against deviation", "[stats]") {
  std::vector<SubjectDataset> data;
  std::vector<double> eta;
  for (int i = 0; i < 8; ++i) {
    const double e = 1.0 + 0.3 * (i - 4);
    data.push_back(agent_run(Dynamic::Multiplicative, IsoelasticParams{e}, 1e3, 50 + i));
    data.back().id = "s" + std::to_string(i);
    eta.push_back(e);
  }
  const auto r = growth_vs_deviation(data, eta, Dynamic::Multiplicative);
  CHECK(r.subjects.size() == 8);
  REQUIRE(r.tau);
  CHECK(*r.tau < 0.0);  // larger deviation, lower growth
  CHECK(r.deviation[4] == 0.0);
  CHECK(growth_vs_deviation(data, eta, Dynamic::Additive).subjects.empty());
  eta.pop_back();
  CHECK_THROWS_AS(growth_vs_deviation(data, eta, Dynamic::Multiplicative), std::invalid_argument);
}
