#include "ergo/design.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace ergo {

namespace {

// Relative tolerance under which two expected utilities count as tied.
constexpr double kTieTolerance = 1e-12;

bool tied(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= kTieTolerance * scale;
}

double wealth_change(const StimulusOutcome& s, double w) {
  return s.dynamic == Dynamic::Additive ? s.value : w * (s.value - 1.0);
}

double log_change(const StimulusOutcome& s, double w) {
  if (s.dynamic == Dynamic::Multiplicative) return s.log_value;
  if (!(w + s.value > 0.0)) throw std::domain_error("log utility of non-positive wealth");
  return std::log1p(s.value / w);
}

double mean_linear(const Gamble& g, double w) {
  return 0.5 * (wealth_change(g.first(), w) + wealth_change(g.second(), w));
}

double mean_log(const Gamble& g, double w) {
  return 0.5 * (log_change(g.first(), w) + log_change(g.second(), w));
}

std::optional<Side> preferred(double left, double right) {
  if (tied(left, right)) return std::nullopt;
  return left > right ? Side::Left : Side::Right;
}

}  // namespace

const StimulusOutcome& StimulusSet::by_id(int id) const {
  for (const auto& s : outcomes) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("stimulus id " + std::to_string(id) + " not in " +
                          std::string(to_string(dynamic)) + " set");
}

bool StimulusSet::contains(int id) const {
  return std::any_of(outcomes.begin(), outcomes.end(), [id](const auto& s) { return s.id == id; });
}

StimulusSet build_stimulus_set(Dynamic d) {
  StimulusSet set;
  set.dynamic = d;
  for (int k = -4; k <= 4; ++k) {
    const auto i = static_cast<std::size_t>(k + 4);
    if (d == Dynamic::Multiplicative) {
      set.outcomes[i] = multiplicative_outcome_from_log(k + 5, k * kLogStep);
    } else {
      set.outcomes[i] = additive_outcome(k + 14, k * kAdditiveStep);
    }
  }
  return set;
}

RejectionBudgetExhausted::RejectionBudgetExhausted(std::uint64_t attempts)
    : std::runtime_error("passive sequence rejection budget exhausted after " +
                         std::to_string(attempts) + " attempts"),
      attempts_(attempts) {}

std::vector<double> passive_wealth_path(const StimulusSet& set, const std::vector<int>& order,
                                        WealthState w0) {
  std::vector<double> path;
  path.reserve(order.size());
  WealthState w = w0;
  for (int id : order) {
    w = apply_outcome(w, set.by_id(id));
    path.push_back(w.amount);
  }
  return path;
}

PassiveSequence generate_passive_sequence(const StimulusSet& set, std::uint64_t seed,
                                          std::uint64_t max_attempts) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx;
  idx.reserve(kBalancedLength);
  for (std::size_t s = 0; s < set.outcomes.size(); ++s) {
    idx.insert(idx.end(), kRepeatsPerStimulus, s);
  }

  auto inside = [](double w) { return w > 0.0 && w < kPassiveUpperBound; };

  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    std::shuffle(idx.begin(), idx.end(), rng);
    WealthState w{kEndowment};
    bool ok = true;
    for (std::size_t i : idx) {
      w = apply_outcome(w, set.outcomes[i]);
      if (!inside(w.amount)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    std::uniform_int_distribution<std::size_t> extra_dist(0, set.outcomes.size() - 1);
    const auto extra = extra_dist(rng);
    w = apply_outcome(w, set.outcomes[extra]);
    if (!inside(w.amount)) continue;

    PassiveSequence seq;
    seq.order.reserve(kBalancedLength + 1);
    for (std::size_t i : idx) seq.order.push_back(set.outcomes[i].id);
    seq.order.push_back(set.outcomes[extra].id);
    seq.seed = seed;
    seq.terminal_wealth = w;
    seq.attempts = attempt;
    return seq;
  }
  throw RejectionBudgetExhausted(max_attempts);
}

GambleSpace build_gamble_space(const StimulusSet& set, std::uint64_t no_brainer_seed) {
  const double neutral = set.neutral().value;
  std::vector<StimulusOutcome> gains;
  std::vector<StimulusOutcome> losses;
  for (const auto& s : set.outcomes) {
    if (s.value > neutral) gains.push_back(s);
    if (s.value < neutral) losses.push_back(s);
  }
  if (gains.size() != 4 || losses.size() != 4) {
    throw std::invalid_argument("gamble space needs exactly 4 gains and 4 losses");
  }

  GambleSpace space;
  for (const auto& g : gains) {
    for (const auto& l : losses) space.mixed.emplace_back(g, l);
  }
  for (const auto& a : space.mixed) {
    for (const auto& b : space.mixed) {
      if (a.first().id == b.first().id || a.second().id == b.second().id) continue;
      space.core.push_back(GamblePair{a, b, PairTag::Core});
    }
  }

  // No-brainers: shared stimulus s with distinct unique stimuli; half drawn
  // from pairs whose unique stimuli are both on the gain side of neutral, half
  // from the loss side.
  struct Candidate {
    std::size_t shared, lo, hi;
  };
  std::vector<Candidate> gain_side;
  std::vector<Candidate> loss_side;
  const std::size_t n = set.outcomes.size();
  const std::size_t mid = n / 2;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t lo = 0; lo < n; ++lo) {
      for (std::size_t hi = lo + 1; hi < n; ++hi) {
        if (lo == s || hi == s) continue;
        if (lo >= mid) gain_side.push_back({s, lo, hi});
        else if (hi <= mid) loss_side.push_back({s, lo, hi});
      }
    }
  }
  std::mt19937_64 rng(no_brainer_seed);
  std::shuffle(gain_side.begin(), gain_side.end(), rng);
  std::shuffle(loss_side.begin(), loss_side.end(), rng);
  std::bernoulli_distribution coin(0.5);
  auto emit = [&](const Candidate& c) {
    Gamble worse(set.outcomes[c.shared], set.outcomes[c.lo]);
    Gamble better(set.outcomes[c.shared], set.outcomes[c.hi]);
    if (coin(rng)) {
      space.no_brainers.push_back(GamblePair{better, worse, PairTag::NoBrainer});
    } else {
      space.no_brainers.push_back(GamblePair{worse, better, PairTag::NoBrainer});
    }
  };
  for (std::size_t i = 0; i < kNoBrainers / 2; ++i) {
    emit(gain_side[i]);
    emit(loss_side[i]);
  }
  return space;
}

Schedule make_schedule(const GambleSpace& space, std::uint64_t seed) {
  Schedule sched;
  sched.seed = seed;
  sched.trials.reserve(2 * space.core.size() + space.no_brainers.size());
  for (int rep = 0; rep < 2; ++rep) {
    sched.trials.insert(sched.trials.end(), space.core.begin(), space.core.end());
  }
  sched.trials.insert(sched.trials.end(), space.no_brainers.begin(), space.no_brainers.end());
  std::mt19937_64 rng(seed);
  std::shuffle(sched.trials.begin(), sched.trials.end(), rng);
  return sched;
}

std::optional<Side> log_preferred_side(const GamblePair& p, WealthState w) {
  if (!(w.amount > 0.0)) throw std::domain_error("discrepancy needs positive wealth");
  return preferred(mean_log(p.left, w.amount), mean_log(p.right, w.amount));
}

bool classify_discrepant(const GamblePair& p, WealthState w) {
  if (!(w.amount > 0.0)) throw std::domain_error("discrepancy needs positive wealth");
  const auto lin = preferred(mean_linear(p.left, w.amount), mean_linear(p.right, w.amount));
  const auto log = log_preferred_side(p, w);
  return lin && log && *lin != *log;
}

std::optional<Side> dominant_choice(const GamblePair& p) {
  const auto& L = p.left;
  const auto& R = p.right;
  const int l[2] = {L.first().id, L.second().id};
  const int r[2] = {R.first().id, R.second().id};
  int shared_count = 0;
  int li = -1;
  int ri = -1;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (l[i] == r[j]) {
        ++shared_count;
        li = i;
        ri = j;
      }
    }
  }
  if (shared_count != 1) return std::nullopt;
  const double left_unique = (li == 0 ? L.second() : L.first()).value;
  const double right_unique = (ri == 0 ? R.second() : R.first()).value;
  if (left_unique == right_unique) return std::nullopt;
  return left_unique > right_unique ? Side::Left : Side::Right;
}

BigCount state_space_size(int n_pairs, int depth) {
  if (n_pairs < 1 || depth < 1) {
    throw std::invalid_argument("state_space_size needs n_pairs >= 1 and depth >= 1");
  }
  const BigCount branching = BigCount(n_pairs) * 2 * 2;
  return boost::multiprecision::pow(branching, static_cast<unsigned>(depth));
}

StimulusOutcome worst_stimulus(const GamblePair& p) {
  StimulusOutcome worst = p.left.first();
  for (const auto& s : {p.left.second(), p.right.first(), p.right.second()}) {
    if (s.growth_contribution() < worst.growth_contribution()) worst = s;
  }
  return worst;
}

GamblePair pair_from_ids(const StimulusSet& set, const std::array<int, 4>& ids, PairTag tag) {
  return GamblePair{Gamble(set.by_id(ids[0]), set.by_id(ids[1])),
                    Gamble(set.by_id(ids[2]), set.by_id(ids[3])), tag};
}

}  // namespace ergo
