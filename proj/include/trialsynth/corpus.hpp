#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trialsynth/common.hpp"

namespace trialsynth {

/// One leaf text field of a registry record. `path` is the element path
/// below the document root, joined with '/' (e.g. "sponsors/lead_sponsor/agency").
struct Field {
  std::string path;
  std::string text;

  bool operator==(const Field&) const = default;
};

struct TrialRecord {
  std::string trial_id;
  std::string raw_xml;
  std::vector<Field> fields;  // document order
  std::vector<std::string> intervention_names;  // canonicalized, first-seen order
  std::optional<std::string> overall_status;
  std::optional<std::string> why_stop;

  bool operator==(const TrialRecord&) const = default;
};

/// Parses one ClinicalTrials.gov-style record. The registry id is the text of
/// the first <nct_id> element; interventions come from every
/// <intervention_name> element.
///
/// Throws Errc::kMalformedXml or Errc::kMissingTrialId.
TrialRecord parse_trial_xml(std::string_view xml_text);

/// Reads every *.xml file under `dir` (sorted by file name).
std::vector<TrialRecord> load_xml_directory(const std::filesystem::path& dir);

/// Flattens fields into "path: text\n" lines in document order. Field text is
/// whitespace-collapsed so every field occupies exactly one line.
std::string serialize_trial(const TrialRecord& record);

enum class ScrubMode { kReal, kSynthetic };

/// Removes label-leaking content.
///
/// kReal drops every line whose field path ends in overall_status or why_stop.
/// kSynthetic additionally drops <overall_status>/<why_stop> elements and the
/// whole words successful/success/failed/failure (case-insensitive), then
/// collapses the horizontal whitespace left behind. Idempotent in both modes.
std::string scrub_leakage(std::string_view text, ScrubMode mode);

using LabelMap = std::map<std::string, Outcome>;

/// CSV with header "trial_id,label". Throws kBadLabelValue, kDuplicateTrialId,
/// kParseError.
LabelMap parse_labels(std::istream& in);
LabelMap load_labels(const std::filesystem::path& label_file);

struct LabeledTrial {
  TrialRecord record;
  std::string text;  // serialized and scrubbed (real mode)
  Outcome label = Outcome::kFailure;

  const std::string& id() const { return record.trial_id; }
  bool operator==(const LabeledTrial&) const = default;
};

class LabeledCorpus {
 public:
  LabeledCorpus() = default;
  /// Throws kDuplicateTrialId.
  explicit LabeledCorpus(std::vector<LabeledTrial> trials);

  const std::vector<LabeledTrial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const LabeledTrial* find(std::string_view trial_id) const;

 private:
  std::vector<LabeledTrial> trials_;
  std::unordered_map<std::string, std::size_t> id_index_;
};

/// Keeps the records that have a label. Each text is serialize -> scrub(real).
/// Throws kEmptyCorpus when nothing matches, kDuplicateTrialId on repeated ids.
LabeledCorpus build_labeled_corpus(const std::vector<TrialRecord>& records,
                                   const LabelMap& labels);

/// JSON-lines, one {"trial_id","text","label","interventions"} object per trial.
std::string corpus_to_jsonl(const LabeledCorpus& corpus);
void write_corpus_jsonl(const LabeledCorpus& corpus, const std::filesystem::path& path);

/// Inverse of corpus_to_jsonl. Records come back without raw_xml or fields.
LabeledCorpus corpus_from_jsonl(std::istream& in);
LabeledCorpus read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace trialsynth
