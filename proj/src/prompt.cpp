#include "trialsynth/prompt.hpp"

#include <algorithm>

#include "trialsynth/error.hpp"

namespace trialsynth {

namespace {

std::vector<PromptSegment> example_segments(const FewShotSet& fewshot) {
  std::vector<PromptSegment> segments;
  for (const auto* trial : fewshot.examples) {
    segments.push_back(
        {SegmentCategory::kExample, example_segment_text(fewshot.label, trial->text)});
  }
  return segments;
}

void finish(PromptBundle& bundle, const PromptOptions& options) {
  bundle.estimated_tokens = options.count_tokens(render(bundle));
  if (bundle.estimated_tokens > options.token_budget) {
    throw Error(Errc::kTokenBudgetExceeded,
                "prompt needs ~" + std::to_string(bundle.estimated_tokens) +
                    " tokens, budget is " + std::to_string(options.token_budget));
  }
}

}  // namespace

std::string_view to_string(SegmentCategory category) {
  switch (category) {
    case SegmentCategory::kContext: return "context";
    case SegmentCategory::kReasoning: return "reasoning";
    case SegmentCategory::kExample: return "example";
    case SegmentCategory::kConstraint: return "constraint";
    case SegmentCategory::kGeneration: return "generation";
    case SegmentCategory::kDiversity: return "diversity";
  }
  return "unknown";
}

std::size_t PromptBundle::count(SegmentCategory category) const {
  return static_cast<std::size_t>(std::count_if(
      segments.begin(), segments.end(),
      [category](const PromptSegment& s) { return s.category == category; }));
}

PromptBundle build_reasoning_prompt(const FewShotSet& fewshot, const PromptOptions& options) {
  const bool success = fewshot.label == Outcome::kSuccess;
  PromptBundle bundle;
  bundle.purpose = PromptPurpose::kReasoning;
  bundle.segments.push_back({SegmentCategory::kContext, std::string(templates::kReasoningContext)});
  for (auto& seg : example_segments(fewshot)) bundle.segments.push_back(std::move(seg));
  bundle.segments.push_back(
      {SegmentCategory::kConstraint, std::string(templates::kReasoningConstraint)});
  bundle.segments.push_back(
      {SegmentCategory::kGeneration,
       fill_template(templates::kReasoningGeneration,
                     {{"intervention", fewshot.intervention},
                      {"outcome_word", success ? "succeed" : "fail"}})});
  if (options.with_diversity) {
    bundle.segments.push_back(
        {SegmentCategory::kDiversity, std::string(templates::kReasoningDiversity)});
  }
  finish(bundle, options);
  return bundle;
}

PromptBundle build_generation_prompt(const FewShotSet& fewshot, const ReasonSet& reasons,
                                     const PromptOptions& options) {
  if (reasons.reasons.size() != kReasonCount) {
    throw Error(Errc::kWrongReasonCount,
                "generation prompt needs 5 reasons, got " + std::to_string(reasons.reasons.size()));
  }
  if (reasons.intervention != fewshot.intervention || reasons.label != fewshot.label) {
    throw Error(Errc::kReasonMismatch, "reasons were written for '" + reasons.intervention +
                                           "' but the examples are for '" +
                                           fewshot.intervention + "'");
  }
  const bool success = fewshot.label == Outcome::kSuccess;
  PromptBundle bundle;
  bundle.purpose = PromptPurpose::kGeneration;
  bundle.segments.push_back(
      {SegmentCategory::kContext, std::string(templates::kGenerationContext)});
  bundle.segments.push_back(
      {SegmentCategory::kReasoning,
       fill_template(templates::kGenerationReasoning,
                     {{"intervention", fewshot.intervention},
                      {"outcome_word", success ? "success" : "failure"},
                      {"reasons", format_reasons(reasons)}})});
  for (auto& seg : example_segments(fewshot)) bundle.segments.push_back(std::move(seg));
  bundle.segments.push_back(
      {SegmentCategory::kConstraint,
       fill_template(templates::kGenerationConstraint, {{"intervention", fewshot.intervention}})});
  bundle.segments.push_back(
      {SegmentCategory::kGeneration,
       fill_template(templates::kGenerationGeneration,
                     {{"intervention", fewshot.intervention},
                      {"outcome_word", success ? "successful" : "failed"}})});
  if (options.with_diversity) {
    bundle.segments.push_back(
        {SegmentCategory::kDiversity, std::string(templates::kGenerationDiversity)});
  }
  finish(bundle, options);
  return bundle;
}

std::string render(const PromptBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < bundle.segments.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += bundle.segments[i].text;
  }
  return out;
}

}  // namespace trialsynth
