#include "trialsynth/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>

#include "trialsynth/error.hpp"

namespace trialsynth {

namespace {

void require_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(Errc::kOutOfRange, "score " + std::to_string(score) + " is outside [0, 1]");
  }
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto comma = row.find(',', start);
    cols.push_back(trim(row.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cols;
}

}  // namespace

std::vector<PredictionRecord> parse_predictions(std::istream& in) {
  std::vector<PredictionRecord> preds;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    auto cols = split_csv(row);
    if (!header_seen) {
      if (cols.size() != 3 || cols[0] != "item_id" || cols[1] != "label" || cols[2] != "score") {
        throw Error(Errc::kParseError, "predictions: expected header item_id,label,score");
      }
      header_seen = true;
      continue;
    }
    if (cols.size() != 3 || cols[0].empty()) {
      throw Error(Errc::kParseError,
                  "predictions line " + std::to_string(line_no) + ": expected 3 columns");
    }
    long long label = 0;
    auto [lp, lec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), label);
    if (lec != std::errc{} || lp != cols[1].data() + cols[1].size()) {
      throw Error(Errc::kBadLabelValue, "predictions line " + std::to_string(line_no) +
                                            ": bad label '" + std::string(cols[1]) + "'");
    }
    double score = 0.0;
    auto [sp, sec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), score);
    if (sec != std::errc{} || sp != cols[2].data() + cols[2].size()) {
      throw Error(Errc::kParseError, "predictions line " + std::to_string(line_no) +
                                         ": bad score '" + std::string(cols[2]) + "'");
    }
    require_score(score);
    preds.push_back({std::string(cols[0]), outcome_from_int(label), score});
  }
  if (!header_seen) throw Error(Errc::kParseError, "predictions: missing header");
  return preds;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  try {
    return parse_predictions(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Outcome classify(double score, double threshold) {
  require_score(score);
  return score >= threshold ? Outcome::kSuccess : Outcome::kFailure;
}

ConfusionMatrix confusion(const std::vector<PredictionRecord>& preds, double threshold) {
  ConfusionMatrix cm;
  for (const auto& p : preds) {
    const bool predicted = classify(p.score, threshold) == Outcome::kSuccess;
    const bool actual = p.label == Outcome::kSuccess;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ThresholdMetrics threshold_metrics(const std::vector<PredictionRecord>& preds,
                                   double threshold) {
  if (preds.empty()) throw Error(Errc::kEmptyInput, "no predictions");
  const ConfusionMatrix cm = confusion(preds, threshold);
  ThresholdMetrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(preds.size());
  if (cm.tp + cm.fp > 0) {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn > 0) {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  return m;
}

double precision_or_throw(const ThresholdMetrics& m) {
  if (!m.precision) throw Error(Errc::kUndefinedPrecision, "no predicted positives");
  return *m.precision;
}

double recall_or_throw(const ThresholdMetrics& m) {
  if (!m.recall) throw Error(Errc::kUndefinedRecall, "no actual positives");
  return *m.recall;
}

double roc_auc(const std::vector<PredictionRecord>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return preds[a].score < preds[b].score; });

  // Mann-Whitney U from the rank sum of positives, ties sharing their midrank.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && preds[order[j]].score == preds[order[i]].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (preds[order[k]].label == Outcome::kSuccess) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = preds.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(Errc::kSingleClass, "ROC-AUC needs both positive and negative labels");
  }
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double pr_auc(const std::vector<PredictionRecord>& preds) {
  std::vector<const PredictionRecord*> ranked;
  ranked.reserve(preds.size());
  for (const auto& p : preds) ranked.push_back(&p);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->item_id < b->item_id;
  });

  const auto n_pos = static_cast<std::size_t>(std::count_if(
      preds.begin(), preds.end(), [](const auto& p) { return p.label == Outcome::kSuccess; }));
  if (n_pos == 0) throw Error(Errc::kNoPositives, "PR-AUC needs at least one positive");

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    if (ranked[rank]->label != Outcome::kSuccess) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return sum / static_cast<double>(n_pos);
}

EvalReport evaluate(const std::vector<PredictionRecord>& preds, std::int64_t seed,
                    double threshold) {
  const ThresholdMetrics t = threshold_metrics(preds, threshold);
  EvalReport r;
  r.accuracy = t.accuracy;
  r.precision = t.precision;
  r.recall = t.recall;
  r.roc_auc = roc_auc(preds);
  r.pr_auc = pr_auc(preds);
  r.n = preds.size();
  r.seed = seed;
  return r;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

AggregateReport aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw Error(Errc::kEmptyInput, "nothing to aggregate");

  auto collect = [&](auto getter) -> MetricSummary {
    std::vector<double> values;
    for (const auto& r : reports) {
      std::optional<double> v = getter(r);
      if (!v) return {};
      values.push_back(*v);
    }
    return summarize(values);
  };

  AggregateReport out;
  out.accuracy = collect([](const EvalReport& r) { return std::optional(r.accuracy); });
  out.precision = collect([](const EvalReport& r) { return r.precision; });
  out.recall = collect([](const EvalReport& r) { return r.recall; });
  out.roc_auc = collect([](const EvalReport& r) { return std::optional(r.roc_auc); });
  out.pr_auc = collect([](const EvalReport& r) { return std::optional(r.pr_auc); });
  out.run_count = reports.size();
  return out;
}

std::string report_csv_header() {
  return "fine_tuning,accuracy_mean,accuracy_std,precision_mean,precision_std,recall_mean,"
         "recall_std,roc_auc_mean,roc_auc_std,pr_auc_mean,pr_auc_std";
}

std::string report_csv_row(const std::string& fine_tuning, const AggregateReport& report) {
  auto fmt = [](const std::optional<double>& v) -> std::string {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  std::string row = fine_tuning;
  for (const MetricSummary* m : {&report.accuracy, &report.precision, &report.recall,
                                 &report.roc_auc, &report.pr_auc}) {
    row += ',' + fmt(m->mean) + ',' + fmt(m->std);
  }
  return row;
}

}  // namespace trialsynth
