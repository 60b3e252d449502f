#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ergo/design.hpp"

namespace ergo {

enum class Choice { Left, Right, Timeout };

std::string to_string(Choice c);
Choice choice_from_string(const std::string& s);

struct Trial {
  GamblePair pair;
  Choice choice = Choice::Timeout;
  double rt_ms = 0.0;
  // Filled in by simulation for auditing; NaN for observed data.
  double delta_u = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
};

/// One subject's active session under one dynamic. `wealth` is the
/// post-passive wealth that stays fixed for every decision of the session.
struct ConditionData {
  Dynamic dynamic = Dynamic::Additive;
  WealthState wealth{kEndowment};
  std::vector<Trial> trials;
};

struct SubjectDataset {
  std::string id;
  std::array<std::optional<ConditionData>, 2> conditions;

  const ConditionData* condition(Dynamic d) const {
    const auto& c = conditions[index_of(d)];
    return c ? &*c : nullptr;
  }
  ConditionData* condition(Dynamic d) {
    auto& c = conditions[index_of(d)];
    return c ? &*c : nullptr;
  }
};

}  // namespace ergo
