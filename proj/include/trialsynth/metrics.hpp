#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trialsynth/common.hpp"

namespace trialsynth {

struct PredictionRecord {
  std::string item_id;
  Outcome label = Outcome::kFailure;
  double score = 0.0;  // predicted probability of success
};

/// CSV "item_id,label,score" with header. Throws Errc::kParseError,
/// Errc::kBadLabelValue, Errc::kOutOfRange.
std::vector<PredictionRecord> parse_predictions(std::istream& in);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

inline constexpr double kDecisionThreshold = 0.5;

/// 1 iff score >= threshold. Throws Errc::kOutOfRange for a score outside [0, 1].
Outcome classify(double score, double threshold = kDecisionThreshold);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

ConfusionMatrix confusion(const std::vector<PredictionRecord>& preds,
                          double threshold = kDecisionThreshold);

/// Precision and recall are empty when undefined (no predicted / no actual
/// positives); they are never reported as zero in that case.
struct ThresholdMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
};

/// Throws Errc::kEmptyInput for an empty list.
ThresholdMetrics threshold_metrics(const std::vector<PredictionRecord>& preds,
                                   double threshold = kDecisionThreshold);

/// Strict accessors for callers that treat an undefined value as an error.
/// Throw Errc::kUndefinedPrecision / Errc::kUndefinedRecall.
double precision_or_throw(const ThresholdMetrics& m);
double recall_or_throw(const ThresholdMetrics& m);

/// P(score_pos > score_neg) + 0.5 P(tie) over all positive/negative pairs,
/// computed from midranks in O(n log n). Throws Errc::kSingleClass.
double roc_auc(const std::vector<PredictionRecord>& preds);

/// Average precision: mean over positives of precision at that positive's
/// rank. Ranking is by descending score, then ascending item_id.
/// Throws Errc::kNoPositives.
double pr_auc(const std::vector<PredictionRecord>& preds);

struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  std::size_t n = 0;
  std::int64_t seed = 0;
};

EvalReport evaluate(const std::vector<PredictionRecord>& preds, std::int64_t seed,
                    double threshold = kDecisionThreshold);

struct MetricSummary {
  std::optional<double> mean;  // empty if any run left the metric undefined
  std::optional<double> std;   // sample (n - 1) standard deviation; 0 for one run
};

struct AggregateReport {
  MetricSummary accuracy;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary roc_auc;
  MetricSummary pr_auc;
  std::size_t run_count = 0;
};

/// Throws Errc::kEmptyInput when `reports` is empty.
AggregateReport aggregate(const std::vector<EvalReport>& reports);

MetricSummary summarize(const std::vector<double>& values);

/// Header of the report CSV (fine_tuning, then mean/std per metric).
std::string report_csv_header();
/// One CSV row; undefined values are written as "NA".
std::string report_csv_row(const std::string& fine_tuning, const AggregateReport& report);

}  // namespace trialsynth
