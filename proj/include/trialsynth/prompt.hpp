#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/reasons.hpp"
#include "trialsynth/retrieval.hpp"
#include "trialsynth/templates.hpp"

namespace trialsynth {

enum class SegmentCategory { kContext, kReasoning, kExample, kConstraint, kGeneration, kDiversity };

std::string_view to_string(SegmentCategory category);

struct PromptSegment {
  SegmentCategory category;
  std::string text;

  bool operator==(const PromptSegment&) const = default;
};

enum class PromptPurpose { kReasoning, kGeneration };

struct PromptBundle {
  PromptPurpose purpose = PromptPurpose::kReasoning;
  std::vector<PromptSegment> segments;
  std::size_t estimated_tokens = 0;

  std::size_t count(SegmentCategory category) const;
};

struct PromptOptions {
  /// Appends the diversity request; the pipeline sets this from the second
  /// request onward for the same (intervention, label).
  bool with_diversity = false;
  std::size_t token_budget = kDefaultTokenBudget;
  TokenCounter count_tokens = estimate_tokens;
};

/// context, example x3, constraint, generation[, diversity].
/// Throws Errc::kTokenBudgetExceeded.
PromptBundle build_reasoning_prompt(const FewShotSet& fewshot, const PromptOptions& options = {});

/// context, reasoning, example x3, constraint, generation[, diversity].
/// Throws Errc::kWrongReasonCount, Errc::kReasonMismatch, Errc::kTokenBudgetExceeded.
PromptBundle build_generation_prompt(const FewShotSet& fewshot, const ReasonSet& reasons,
                                     const PromptOptions& options = {});

/// Segments joined by one blank line.
std::string render(const PromptBundle& bundle);

}  // namespace trialsynth
