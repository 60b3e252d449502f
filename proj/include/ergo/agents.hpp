#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ergo/dataset.hpp"
#include "ergo/parallel.hpp"
#include "ergo/utility.hpp"

namespace ergo {

/// Utility model, sensitivity, and frozen wealth for one condition.
struct ConditionAgent {
  UtilityModelSpec model = TimeOptimalParams{};
  double beta = 1.0;
  WealthState wealth{kEndowment};
};

struct AgentConfig {
  std::string id;
  std::array<ConditionAgent, 2> conditions{};

  const ConditionAgent& operator[](Dynamic d) const { return conditions[index_of(d)]; }
  ConditionAgent& operator[](Dynamic d) { return conditions[index_of(d)]; }
};

/// Same model, beta and wealth under both dynamics.
AgentConfig uniform_agent(std::string id, const UtilityModelSpec& model, double beta,
                          WealthState wealth = {kEndowment});

inline constexpr double kCalibrationTarget = 3.0;
inline constexpr double kMinLogBeta = -2.3;
inline constexpr double kMaxLogBeta = 3.4;

/// Sensitivity giving median |beta * du| = `target` over the core pairs of a
/// dynamic, optionally clamped so ln beta stays inside [-2.3, 3.4], the range
/// the estimation models allow for group means.
double calibrated_sensitivity(const UtilityModelSpec& model, Dynamic d, WealthState w = {kEndowment},
                              double target = kCalibrationTarget, bool clamp_to_prior = true);

/// Draws a left/right choice for every trial of `sched`. The returned dataset
/// has only the schedule's condition filled; each trial records du and theta.
SubjectDataset simulate_choices(const AgentConfig& agent, const Schedule& sched,
                                std::uint64_t seed);

/// Both conditions, with independent streams derived from `seed`.
SubjectDataset simulate_subject(const AgentConfig& agent, const Schedule& additive,
                                const Schedule& multiplicative, std::uint64_t seed);

inline constexpr double kSecondsPerTrial = 9.5;
inline constexpr std::int64_t kTrialsPerWeek = static_cast<std::int64_t>(604800.0 / kSecondsPerTrial);

/// Realized wealth path of an agent repeatedly playing random core pairs.
/// Multiplicative paths are stored as natural-log wealth to stay finite over
/// long horizons.
struct Trajectory {
  Dynamic dynamic = Dynamic::Additive;
  std::vector<double> level;  // wealth (additive) or ln wealth (multiplicative)
  bool went_negative = false;

  std::size_t trials() const { return level.empty() ? 0 : level.size() - 1; }
  double time_seconds(std::size_t i) const { return static_cast<double>(i) * kSecondsPerTrial; }
  /// Realized time-average growth rate per trial.
  double growth_rate() const;
};

/// Decisions use the agent's frozen wealth; the chosen gamble's outcome is
/// realized by a fair coin. Each trial consumes the same three random draws
/// (pair, choice, coin) whatever the agent does, so agents simulated with one
/// seed face common random numbers.
Trajectory simulate_trajectory(const ConditionAgent& agent, Dynamic d, std::int64_t horizon,
                               std::uint64_t seed, WealthState start = {kEndowment});

struct NamedAgent {
  std::string name;
  AgentConfig config;
};

/// The 12 synthetic agents: prospect theory over lambda {1,2,3} x alpha
/// {0.3,0.6,0.9}, isoelastic eta {0,1}, and the time-optimal agent.
std::vector<NamedAgent> synthetic_agent_roster(double beta = 1e3);

/// Index of the time-optimal agent in synthetic_agent_roster().
inline constexpr std::size_t kTimeOptimalRosterIndex = 11;

/// Trajectories for every agent under common random numbers.
std::vector<Trajectory> simulate_roster(std::span<const NamedAgent> agents, Dynamic d,
                                        std::int64_t horizon, std::uint64_t seed,
                                        Execution exec = Execution::Parallel);

}  // namespace ergo
