#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/common.hpp"

namespace trialsynth {

inline constexpr std::size_t kReasonCount = 5;

/// Five reasons explaining why trials of one intervention reached one outcome.
struct ReasonSet {
  std::string intervention;
  Outcome label = Outcome::kFailure;
  std::vector<std::string> reasons;

  bool operator==(const ReasonSet&) const = default;
};

/// Extracts a "1. ... 2. ... 3. ... 4. ... 5. ..." list, inline or one item
/// per line. Text before "1." is ignored; items are trimmed.
///
/// Throws Errc::kMalformedReasonList unless exactly five non-empty items are found.
ReasonSet parse_reasons(std::string_view response, std::string_view intervention, Outcome label);

/// "1. A\n2. B\n..." as embedded in the generation prompt.
std::string format_reasons(const ReasonSet& reasons);

}  // namespace trialsynth
