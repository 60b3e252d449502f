#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

#include "ergo/mixture.hpp"

namespace ergo {

namespace {

using boost::math::digamma;

void check_evidence(std::span<const std::vector<double>> log_evidence) {
  if (log_evidence.empty()) throw std::invalid_argument("model comparison needs at least one subject");
  const std::size_t k = log_evidence.front().size();
  if (k < 2) throw std::invalid_argument("model comparison needs at least two models");
  for (const auto& row : log_evidence) {
    if (row.size() != k) throw std::invalid_argument("ragged evidence table");
  }
}

// ln Dirichlet normalizer B(a) = sum lgamma(a_k) - lgamma(sum a).
double log_beta_fn(std::span<const double> a) {
  double s = 0.0, t = 0.0;
  for (double x : a) {
    s += std::lgamma(x);
    t += x;
  }
  return s - std::lgamma(t);
}

std::vector<std::vector<double>> log_probabilities(
    std::span<const std::array<double, kModelFamilies>> probs) {
  std::vector<std::vector<double>> out;
  out.reserve(probs.size());
  for (const auto& p : probs) {
    std::vector<double> row(kModelFamilies);
    for (std::size_t k = 0; k < kModelFamilies; ++k) row[k] = std::log(std::max(p[k], kProbabilityFloor));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

DirichletFit fit_dirichlet_random_effects(std::span<const std::vector<double>> log_evidence,
                                          double alpha0) {
  check_evidence(log_evidence);
  const std::size_t n = log_evidence.size();
  const std::size_t k = log_evidence.front().size();
  DirichletFit fit;
  fit.alpha.assign(k, alpha0);
  fit.responsibilities.assign(n, std::vector<double>(k, 1.0 / k));

  std::vector<double> lu(k);
  for (fit.iterations = 1; fit.iterations <= 10000; ++fit.iterations) {
    const double psi_sum = digamma(std::accumulate(fit.alpha.begin(), fit.alpha.end(), 0.0));
    std::vector<double> next(k, alpha0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < k; ++m) lu[m] = log_evidence[i][m] + digamma(fit.alpha[m]) - psi_sum;
      const double top = *std::max_element(lu.begin(), lu.end());
      double z = 0.0;
      for (std::size_t m = 0; m < k; ++m) z += std::exp(lu[m] - top);
      for (std::size_t m = 0; m < k; ++m) {
        fit.responsibilities[i][m] = std::exp(lu[m] - top) / z;
        next[m] += fit.responsibilities[i][m];
      }
    }
    double change = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      next[m] = std::max(next[m], kAlphaFloor);
      change = std::max(change, std::abs(next[m] - fit.alpha[m]));
    }
    fit.alpha = next;
    if (change < 1e-12) break;
  }

  // Free energy: expected log joint + entropy of q(m) - KL(q(r) || p(r)).
  const double a_sum = std::accumulate(fit.alpha.begin(), fit.alpha.end(), 0.0);
  const double psi_sum = digamma(a_sum);
  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < k; ++m) {
      const double g = fit.responsibilities[i][m];
      if (g <= 0.0) continue;
      f += g * (log_evidence[i][m] + digamma(fit.alpha[m]) - psi_sum - std::log(g));
    }
  }
  const std::vector<double> prior(k, alpha0);
  double kl = log_beta_fn(prior) - log_beta_fn(fit.alpha);
  for (std::size_t m = 0; m < k; ++m) kl += (fit.alpha[m] - alpha0) * (digamma(fit.alpha[m]) - psi_sum);
  fit.free_energy = f - kl;
  return fit;
}

double null_free_energy(std::span<const std::vector<double>> log_evidence) {
  check_evidence(log_evidence);
  const double k = static_cast<double>(log_evidence.front().size());
  double f = 0.0;
  for (const auto& row : log_evidence) {
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double l : row) z += std::exp(l - top);
    f += top + std::log(z / k);
  }
  return f;
}

std::vector<double> exceedance_probabilities(std::span<const double> alpha, std::uint64_t seed,
                                             int draws) {
  if (alpha.empty() || draws < 1) throw std::invalid_argument("exceedance needs alpha and draws");
  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> gam;
  for (double a : alpha) gam.emplace_back(a, 1.0);
  std::vector<long> wins(alpha.size(), 0);
  std::vector<double> r(alpha.size());
  for (int t = 0; t < draws; ++t) {
    for (std::size_t k = 0; k < alpha.size(); ++k) r[k] = gam[k](rng);
    ++wins[std::max_element(r.begin(), r.end()) - r.begin()];
  }
  std::vector<double> out(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) out[k] = static_cast<double>(wins[k]) / draws;
  return out;
}

std::pair<std::array<double, kModelFamilies>, std::array<double, kModelFamilies>>
estimated_frequencies(std::span<const std::array<double, kModelFamilies>> subject_probs) {
  const auto fit = fit_dirichlet_random_effects(log_probabilities(subject_probs));
  const double a0 = std::accumulate(fit.alpha.begin(), fit.alpha.end(), 0.0);
  std::array<double, kModelFamilies> mean{}, sd{};
  for (std::size_t k = 0; k < kModelFamilies; ++k) {
    mean[k] = fit.alpha[k] / a0;
    sd[k] = std::sqrt(fit.alpha[k] * (a0 - fit.alpha[k]) / (a0 * a0 * (a0 + 1.0)));
  }
  return {mean, sd};
}

std::vector<double> protect(std::span<const double> exceedance, double bor) {
  std::vector<double> out(exceedance.size());
  for (std::size_t k = 0; k < exceedance.size(); ++k) {
    out[k] = exceedance[k] * (1.0 - bor) + bor / exceedance.size();
  }
  return out;
}

ModelComparisonResult protected_exceedance(
    std::span<const std::array<double, kModelFamilies>> subject_probs, std::uint64_t seed) {
  const auto le = log_probabilities(subject_probs);
  const auto fit = fit_dirichlet_random_effects(le);
  ModelComparisonResult res;
  res.subject_probabilities.assign(subject_probs.begin(), subject_probs.end());
  std::tie(res.frequency, res.frequency_sd) = estimated_frequencies(subject_probs);
  std::copy(fit.alpha.begin(), fit.alpha.end(), res.alpha.begin());
  res.free_energy = fit.free_energy;
  res.null_free_energy = null_free_energy(le);
  // BOR = p(null | data) with equal prior odds.
  res.bor = 1.0 / (1.0 + std::exp(res.free_energy - res.null_free_energy));
  const auto ep = exceedance_probabilities(fit.alpha, seed);
  const auto pxp = protect(ep, res.bor);
  for (std::size_t k = 0; k < kModelFamilies; ++k) {
    res.exceedance[k] = ep[k];
    res.protected_exceedance[k] = pxp[k];
  }
  return res;
}

}  // namespace ergo
