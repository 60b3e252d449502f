#include "ergo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ergo/design.hpp"
#include "ergo/utility.hpp"

namespace ergo {

ChoiceProportion choice_proportion_log(const SubjectDataset& data, Dynamic condition) {
  ChoiceProportion out;
  out.subject = data.id;
  out.condition = condition;
  const ConditionData* cond = data.condition(condition);
  if (!cond) return out;
  for (const auto& t : cond->trials) {
    if (!classify_discrepant(t.pair, cond->wealth)) continue;
    ++out.n_discrepant;
    if (t.choice == Choice::Timeout) continue;
    ++out.n_answered;
    const auto side = log_preferred_side(t.pair, cond->wealth);
    const Side chosen = t.choice == Choice::Left ? Side::Left : Side::Right;
    if (side && *side == chosen) ++out.n_log;
  }
  if (out.n_answered > 0) out.cp_log = static_cast<double>(out.n_log) / out.n_answered;
  return out;
}

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Greater: return "greater";
    case Alternative::Less: return "less";
  }
  return "?";
}

namespace {

struct TLikelihood {
  double t;
  double df;
  double sqrt_n;
  double operator()(double delta) const {
    boost::math::non_central_t_distribution<double> d(df, delta * sqrt_n);
    return boost::math::pdf(d, t);
  }
};

// Prior support on the delta axis for the given alternative.
std::pair<double, double> support(Alternative side) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (side) {
    case Alternative::Greater: return {0.0, inf};
    case Alternative::Less: return {-inf, 0.0};
    default: return {-inf, inf};
  }
}

void check_inputs(int n, double scale) {
  if (n < 2) throw std::invalid_argument("Bayes factor t-test needs n >= 2");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("Cauchy prior scale must be positive");
  }
}

}  // namespace

double jzs_bf_from_t(double t, int n, Alternative side, double scale) {
  check_inputs(n, scale);
  if (!std::isfinite(t)) throw std::domain_error("t statistic is not finite");
  const TLikelihood lik{t, static_cast<double>(n - 1), std::sqrt(static_cast<double>(n))};
  const double null_density = lik(0.0);

  // delta = scale * tan(phi) turns the Cauchy measure into dphi / pi on a
  // finite interval; break at the likelihood peak so the adaptive rule sees it.
  auto [dlo, dhi] = support(side);
  const double plo = std::atan(dlo / scale);
  const double phi_hi = std::atan(dhi / scale);
  const double peak = std::clamp(std::atan(t / std::sqrt(static_cast<double>(n)) / scale), plo,
                                 phi_hi);
  auto f = [&](double phi) {
    const double c = std::cos(phi);
    if (c <= 0.0) return 0.0;
    return lik(scale * std::tan(phi)) / null_density;
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double ratio = 0.0;
  if (peak > plo) ratio += Quad::integrate(f, plo, peak, 15, 1e-12);
  if (phi_hi > peak) ratio += Quad::integrate(f, peak, phi_hi, 15, 1e-12);
  // Prior mass of the (possibly truncated) support.
  const double mass = (phi_hi - plo) / std::numbers::pi;
  return ratio / std::numbers::pi / mass;
}

namespace {

inline constexpr double kGridLo = -10.0;
inline constexpr double kGridHi = 10.0;
inline constexpr int kGridPoints = 1 << 14;

void posterior_summary(BayesFactorResult& r) {
  const TLikelihood lik{r.t, static_cast<double>(r.n - 1), std::sqrt(static_cast<double>(r.n))};
  const auto [lo, hi] = support(r.side);
  const double step = (kGridHi - kGridLo) / (kGridPoints - 1);
  std::vector<double> x(kGridPoints), dens(kGridPoints, 0.0);
  for (int k = 0; k < kGridPoints; ++k) {
    x[k] = kGridLo + k * step;
    if (x[k] < lo || x[k] > hi) continue;
    const double z = x[k] / r.prior_scale;
    dens[k] = lik(x[k]) / (1.0 + z * z);
  }
  std::vector<double> cdf(kGridPoints, 0.0);
  for (int k = 1; k < kGridPoints; ++k) cdf[k] = cdf[k - 1] + 0.5 * step * (dens[k] + dens[k - 1]);
  const double total = cdf.back();
  if (!(total > 0.0)) {
    r.posterior_median = r.lo95 = r.hi95 = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  auto quantile = [&](double q) {
    const double target = q * total;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    const auto k = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    if (k == 0) return x.front();
    if (k >= cdf.size()) return x.back();
    const double span = cdf[k] - cdf[k - 1];
    const double frac = span > 0.0 ? (target - cdf[k - 1]) / span : 0.0;
    return x[k - 1] + frac * step;
  };
  r.posterior_median = quantile(0.5);
  r.lo95 = quantile(0.025);
  r.hi95 = quantile(0.975);
}

}  // namespace

BayesFactorResult jzs_bf_ttest(std::span<const double> samples, double null_value,
                               Alternative side, double scale) {
  const int n = static_cast<int>(samples.size());
  check_inputs(n, scale);
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 0.0)) throw std::domain_error("zero-variance samples");

  BayesFactorResult r;
  r.side = side;
  r.prior_scale = scale;
  r.n = n;
  r.t = (mean - null_value) / (sd / std::sqrt(static_cast<double>(n)));
  r.bf = jzs_bf_from_t(r.t, n, side, scale);
  posterior_summary(r);
  return r;
}

BayesFactorResult jzs_bf_paired(std::span<const double> x, std::span<const double> y,
                                Alternative side, double scale) {
  if (x.size() != y.size()) throw std::invalid_argument("paired samples differ in length");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return jzs_bf_ttest(d, 0.0, side, scale);
}

ModelDistances distance_to_models(double eta_add, double eta_mult) {
  return {std::hypot(eta_add, eta_mult - 1.0),
          std::abs(eta_add - eta_mult) / std::numbers::sqrt2};
}

namespace {

std::int64_t tie_pairs(std::span<const std::size_t> order, auto same) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k < order.size() && same(order[k - 1], order[k])) {
      ++run;
      continue;
    }
    total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
    run = 1;
  }
  return total;
}

// Stable merge sort of idx by key, returning the number of strict inversions.
std::int64_t merge_count(std::vector<std::size_t>& idx, std::vector<std::size_t>& buf,
                         std::span<const double> key, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(idx, buf, key, lo, mid) + merge_count(idx, buf, key, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (key[idx[j]] < key[idx[i]]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = idx[j++];
    } else {
      buf[k++] = idx[i++];
    }
  }
  while (i < mid) buf[k++] = idx[i++];
  while (j < hi) buf[k++] = idx[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, idx.begin() + lo);
  return swaps;
}

}  // namespace

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("kendall_tau needs n >= 2");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const std::int64_t n1 = tie_pairs(idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::int64_t n3 = tie_pairs(
      idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
  std::vector<std::size_t> buf(n);
  const std::int64_t swaps = merge_count(idx, buf, y, 0, n);
  const std::int64_t n2 = tie_pairs(idx, [&](std::size_t a, std::size_t b) { return y[a] == y[b]; });

  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  if (n0 == n1 || n0 == n2) return std::nullopt;
  const std::int64_t s = n0 - n1 - n2 + n3 - 2 * swaps;
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

namespace {

// Midranks of |d|, 1-based.
std::vector<double> abs_ranks(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && std::abs(d[idx[j]]) == std::abs(d[idx[i]])) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank[idx[k]] = mid;
    i = j;
  }
  return rank;
}

// Subset-sum counts over doubled ranks (midranks double to integers).
std::vector<double> signed_rank_counts(std::span<const double> ranks) {
  std::vector<int> r2(ranks.size());
  int total = 0;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    r2[k] = static_cast<int>(std::lround(2.0 * ranks[k]));
    total += r2[k];
  }
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  int reach = 0;
  for (int r : r2) {
    for (int s = reach; s >= 0; --s) {
      if (count[s] != 0.0) count[s + r] += count[s];
    }
    reach += r;
  }
  return count;
}

}  // namespace

double wilcoxon_exact_cdf(std::span<const double> ranks, double v) {
  const auto count = signed_rank_counts(ranks);
  const double limit = 2.0 * v + 1e-9;
  double below = 0.0;
  for (std::size_t s = 0; s < count.size() && static_cast<double>(s) <= limit; ++s) below += count[s];
  return below / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> samples, double null_value) {
  std::vector<double> d;
  d.reserve(samples.size());
  for (double v : samples) {
    if (v - null_value != 0.0) d.push_back(v - null_value);
  }
  if (d.size() < 2) throw std::domain_error("signed-rank test needs two nonzero differences");

  const auto rank = abs_ranks(d);
  WilcoxonResult out;
  out.n = static_cast<int>(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] > 0.0) out.v += rank[k];
  }
  const double nn = out.n;
  const double max_v = nn * (nn + 1.0) / 2.0;

  if (out.n <= kWilcoxonExactMax) {
    out.exact = true;
    const double lower = wilcoxon_exact_cdf(rank, out.v);
    // P(V >= v) = P(V' <= max - v) by the symmetry V' = max - V.
    const double upper = wilcoxon_exact_cdf(rank, max_v - out.v);
    out.p = std::min(1.0, 2.0 * std::min(lower, upper));
    return out;
  }

  std::vector<double> sorted = rank;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mean = max_v / 2.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = std::abs(out.v - mean);
  const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(
                                  boost::math::normal_distribution<double>(), z)));
  return out;
}

namespace {

double trial_growth(const Trial& t) {
  switch (t.choice) {
    case Choice::Left: return gamble_growth_rate(t.pair.left);
    case Choice::Right: return gamble_growth_rate(t.pair.right);
    default: return worst_stimulus(t.pair).growth_contribution();
  }
}

}  // namespace

double session_growth(const ConditionData& cond) {
  if (cond.trials.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& t : cond.trials) sum += trial_growth(t);
  return sum / static_cast<double>(cond.trials.size());
}

double schedule_mean_growth(const ConditionData& cond) {
  if (cond.trials.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& t : cond.trials) {
    sum += 0.5 * (gamble_growth_rate(t.pair.left) + gamble_growth_rate(t.pair.right));
  }
  return sum / static_cast<double>(cond.trials.size());
}

GrowthDeviation growth_vs_deviation(std::span<const SubjectDataset> data,
                                    std::span<const double> eta, Dynamic condition) {
  if (data.size() != eta.size()) throw std::invalid_argument("one eta estimate per subject");
  GrowthDeviation out;
  out.condition = condition;
  const double opt = time_optimal_eta(condition);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ConditionData* c = data[i].condition(condition);
    if (!c || c->trials.empty()) continue;
    out.subjects.push_back(data[i].id);
    out.deviation.push_back(std::abs(eta[i] - opt));
    out.growth.push_back(session_growth(*c));
  }
  if (out.subjects.size() >= 2) out.tau = kendall_tau(out.deviation, out.growth);
  return out;
}

}  // namespace ergo
