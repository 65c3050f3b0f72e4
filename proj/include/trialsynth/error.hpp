#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trialsynth {

enum class Errc {
  // corpus
  kMalformedXml,
  kMissingTrialId,
  kBadLabelValue,
  kDuplicateTrialId,
  kEmptyCorpus,
  // retrieval
  kEmptyVocabulary,
  kNotEnoughExamples,
  kTokenBudgetExhausted,
  // prompt
  kTokenBudgetExceeded,
  kWrongReasonCount,
  kReasonMismatch,
  kUnresolvedPlaceholder,
  // llm
  kBudgetExceeded,
  kTransportError,
  kEmptyResponse,
  kMalformedReasonList,
  kMissingIntervention,
  kNotReportShaped,
  // pipeline
  kNoEligibleInterventions,
  kAllUnitsFailed,
  kIoError,
  kParseError,
  // datasets
  kTooFewItems,
  kPoolTooSmall,
  kSingleClass,
  kOverlappingSplits,
  // metrics
  kOutOfRange,
  kUndefinedPrecision,
  kUndefinedRecall,
  kNoPositives,
  kEmptyInput,
  // analysis
  kDimensionMismatch,
  kNonFiniteValue,
  kDuplicateId,
  kZeroVector,
  // cli
  kUsageError,
};

std::string_view to_string(Errc code);

/// Module that owns an error code ("corpus", "retrieval", ...).
std::string_view module_of(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace trialsynth
