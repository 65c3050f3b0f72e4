#include "trialsynth/error.hpp"

namespace trialsynth {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kMalformedXml: return "MalformedXml";
    case Errc::kMissingTrialId: return "MissingTrialId";
    case Errc::kBadLabelValue: return "BadLabelValue";
    case Errc::kDuplicateTrialId: return "DuplicateTrialId";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kEmptyVocabulary: return "EmptyVocabulary";
    case Errc::kNotEnoughExamples: return "NotEnoughExamples";
    case Errc::kTokenBudgetExhausted: return "TokenBudgetExhausted";
    case Errc::kTokenBudgetExceeded: return "TokenBudgetExceeded";
    case Errc::kWrongReasonCount: return "WrongReasonCount";
    case Errc::kReasonMismatch: return "ReasonMismatch";
    case Errc::kUnresolvedPlaceholder: return "UnresolvedPlaceholder";
    case Errc::kBudgetExceeded: return "BudgetExceeded";
    case Errc::kTransportError: return "TransportError";
    case Errc::kEmptyResponse: return "EmptyResponse";
    case Errc::kMalformedReasonList: return "MalformedReasonList";
    case Errc::kMissingIntervention: return "MissingIntervention";
    case Errc::kNotReportShaped: return "NotReportShaped";
    case Errc::kNoEligibleInterventions: return "NoEligibleInterventions";
    case Errc::kAllUnitsFailed: return "AllUnitsFailed";
    case Errc::kIoError: return "IoError";
    case Errc::kParseError: return "ParseError";
    case Errc::kTooFewItems: return "TooFewItems";
    case Errc::kPoolTooSmall: return "PoolTooSmall";
    case Errc::kSingleClass: return "SingleClass";
    case Errc::kOverlappingSplits: return "OverlappingSplits";
    case Errc::kOutOfRange: return "OutOfRange";
    case Errc::kUndefinedPrecision: return "UndefinedPrecision";
    case Errc::kUndefinedRecall: return "UndefinedRecall";
    case Errc::kNoPositives: return "NoPositives";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNonFiniteValue: return "NonFiniteValue";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kUsageError: return "UsageError";
  }
  return "Unknown";
}

std::string_view module_of(Errc code) {
  switch (code) {
    case Errc::kMalformedXml:
    case Errc::kMissingTrialId:
    case Errc::kBadLabelValue:
    case Errc::kDuplicateTrialId:
    case Errc::kEmptyCorpus:
      return "corpus";
    case Errc::kEmptyVocabulary:
    case Errc::kNotEnoughExamples:
    case Errc::kTokenBudgetExhausted:
      return "retrieval";
    case Errc::kTokenBudgetExceeded:
    case Errc::kWrongReasonCount:
    case Errc::kReasonMismatch:
    case Errc::kUnresolvedPlaceholder:
      return "promptforge";
    case Errc::kBudgetExceeded:
    case Errc::kTransportError:
    case Errc::kEmptyResponse:
    case Errc::kMalformedReasonList:
    case Errc::kMissingIntervention:
    case Errc::kNotReportShaped:
      return "llm_gateway";
    case Errc::kNoEligibleInterventions:
    case Errc::kAllUnitsFailed:
      return "pipeline";
    case Errc::kIoError:
    case Errc::kParseError:
      return "io";
    case Errc::kTooFewItems:
    case Errc::kPoolTooSmall:
    case Errc::kSingleClass:
    case Errc::kOverlappingSplits:
      return "datasets";
    case Errc::kOutOfRange:
    case Errc::kUndefinedPrecision:
    case Errc::kUndefinedRecall:
    case Errc::kNoPositives:
    case Errc::kEmptyInput:
      return "metrics";
    case Errc::kDimensionMismatch:
    case Errc::kNonFiniteValue:
    case Errc::kDuplicateId:
    case Errc::kZeroVector:
      return "analysis";
    case Errc::kUsageError:
      return "cli";
  }
  return "unknown";
}

}  // namespace trialsynth
