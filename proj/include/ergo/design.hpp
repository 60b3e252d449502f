#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ergo/dynamics.hpp"

namespace ergo {

inline constexpr int kStimuliPerSet = 9;
inline constexpr int kRepeatsPerStimulus = 37;
inline constexpr int kBalancedLength = kStimuliPerSet * kRepeatsPerStimulus;  // 333
inline constexpr double kPassiveUpperBound = 5000.0;
inline constexpr double kAdditiveStep = 107.0;
inline constexpr double kLogStep = 0.806 / 4.0;
inline constexpr int kCorePairs = 144;
inline constexpr int kNoBrainers = 24;
inline constexpr int kScheduleLength = 2 * kCorePairs + kNoBrainers;  // 312
inline constexpr std::uint64_t kDefaultRejectionBudget = 1'000'000;

/// The nine outcomes available on one test day, ordered from worst to best.
/// Multiplicative ids are 1..9 and additive ids 10..18; the middle entry is
/// the neutral stimulus (factor 1 or increment 0).
struct StimulusSet {
  Dynamic dynamic = Dynamic::Additive;
  std::array<StimulusOutcome, kStimuliPerSet> outcomes{};

  const StimulusOutcome& by_id(int id) const;
  bool contains(int id) const;
  const StimulusOutcome& neutral() const { return outcomes[kStimuliPerSet / 2]; }
  const StimulusOutcome& worst() const { return outcomes.front(); }
  int first_id() const { return outcomes.front().id; }
};

StimulusSet build_stimulus_set(Dynamic d);

struct PassiveSequence {
  std::vector<int> order;  // 333 balanced entries + 1 extra
  std::uint64_t seed = 0;
  WealthState terminal_wealth{};
  std::uint64_t attempts = 0;
};

class RejectionBudgetExhausted : public std::runtime_error {
 public:
  explicit RejectionBudgetExhausted(std::uint64_t attempts);
  std::uint64_t attempts() const { return attempts_; }

 private:
  std::uint64_t attempts_;
};

/// Rejection-samples a permutation of the 37x9 multiset whose running wealth
/// (from the 1000 DKK endowment) stays strictly inside (0, 5000), then appends
/// one uniformly drawn extra stimulus. Deterministic in `seed`.
PassiveSequence generate_passive_sequence(const StimulusSet& set, std::uint64_t seed,
                                          std::uint64_t max_attempts = kDefaultRejectionBudget);

/// Running wealth after each entry of `order`, starting from `w0`.
std::vector<double> passive_wealth_path(const StimulusSet& set, const std::vector<int>& order,
                                        WealthState w0 = {kEndowment});

enum class PairTag { Core, NoBrainer };
enum class Side { Left, Right };

struct GamblePair {
  Gamble left;
  Gamble right;
  PairTag tag = PairTag::Core;

  std::array<int, 4> ids() const {
    return {left.first().id, left.second().id, right.first().id, right.second().id};
  }
  Dynamic dynamic() const { return left.dynamic(); }
};

struct GambleSpace {
  std::vector<Gamble> mixed;            // 16 gain x loss gambles
  std::vector<GamblePair> core;         // 144 ordered pairs
  std::vector<GamblePair> no_brainers;  // 24 dominated pairs
};

/// Builds the mixed gambles, the 144 ordered core pairs (left gamble paired
/// with each mixed gamble sharing no stimulus), and 24 seeded no-brainers.
GambleSpace build_gamble_space(const StimulusSet& set, std::uint64_t no_brainer_seed = 0);

struct Schedule {
  std::vector<GamblePair> trials;
  std::uint64_t seed = 0;
};

/// Every core pair twice plus the no-brainers, in a seeded random order.
Schedule make_schedule(const GambleSpace& space, std::uint64_t seed);

/// True when the gamble preferred under linear utility differs from the one
/// preferred under logarithmic utility at wealth `w`. Ties are never discrepant.
bool classify_discrepant(const GamblePair& p, WealthState w);

/// Side preferred under exact log utility at wealth `w`, empty on a tie.
std::optional<Side> log_preferred_side(const GamblePair& p, WealthState w);

/// Statewise dominance: when both gambles share exactly one stimulus, the side
/// holding the better unique stimulus. Empty otherwise.
std::optional<Side> dominant_choice(const GamblePair& p);

using BigCount = boost::multiprecision::cpp_int;

/// Terminal-wealth count of the decision tree: (pairs x 2 choices x 2 outcomes)^depth.
BigCount state_space_size(int n_pairs, int depth);

/// Stimulus assigned when the subject times out: the worst outcome shown.
StimulusOutcome worst_stimulus(const GamblePair& p);

/// Rebuilds a pair from four stimulus ids resolved against `set`.
GamblePair pair_from_ids(const StimulusSet& set, const std::array<int, 4>& ids, PairTag tag);

}  // namespace ergo
