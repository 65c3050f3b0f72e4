#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "trialsynth/common.hpp"

namespace trialsynth {

/// Prompt text resources. Placeholders are written {name}; see fill_template.
namespace templates {

inline constexpr std::string_view kReasoningContext =
    "You are now a medical expert in the clinical area. You are given information of a "
    "medical intervention, and three clinical trial reports of it, either all successful or "
    "all failed. You are asked to analyze these input and write reasons resulting in the "
    "trials' success/failure. Your writing style must be consistent within the clinical "
    "study. You must ensure that your language is precise, technical, and reasonable.";

inline constexpr std::string_view kExample = "{outcome_word} clinical trial example:\n{example}";

inline constexpr std::string_view kReasoningConstraint =
    "Your output should strictly follow the following format: 1. (...) 2. (...) 3. (...) "
    "4. (...) 5. (...), with (...) being the reasons you write.";

inline constexpr std::string_view kReasoningGeneration =
    "Write 5 reasons leading {intervention} to {outcome_word} in these trials. Be creative "
    "and write unique reasons.";

inline constexpr std::string_view kReasoningDiversity =
    "Can you provide something more diverse compared to the previously generated reasons?";

inline constexpr std::string_view kGenerationContext =
    "You are now a medical expert in the clinical area. You are asked to write a report of a "
    "successful or failed clinical trial. Your writing style must be consistent within the "
    "clinical study. Ensure your language is precise, technical, and formal.";

inline constexpr std::string_view kGenerationReasoning =
    "Here are five reasons that could lead to the {outcome_word} of clinical trials of "
    "{intervention}:\n{reasons}";

inline constexpr std::string_view kGenerationConstraint =
    "Your output style should strictly follow the XML-like format of the provided examples. "
    "You cannot simply modify or rewrite them. The intervention name must be {intervention}, "
    "and you must refer to these reasons when writing clinical trials.";

inline constexpr std::string_view kGenerationGeneration =
    "Write a report of a {outcome_word} clinical trial of {intervention}. Ensure your language "
    "is precise, technical, and formal. Be creative and write unique reports.";

inline constexpr std::string_view kGenerationDiversity =
    "Can you provide something more diverse compared to the previously generated reports?";

}  // namespace templates

/// Substitutes every {name} in `tmpl`. Inserted values are not rescanned.
/// Throws Errc::kUnresolvedPlaceholder for a {name} missing from `values`.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Heuristic token count: ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text);

/// Replaceable counter; an exact tokenizer can be plugged in here.
using TokenCounter = std::function<std::size_t(std::string_view)>;

inline constexpr std::size_t kDefaultTokenBudget = 128'000;

/// "Successful clinical trial example:\n<text>" (or "Failed ...").
std::string example_segment_text(Outcome label, std::string_view trial_text);

}  // namespace trialsynth
