#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/corpus.hpp"
#include "trialsynth/templates.hpp"

namespace trialsynth {

class DrugVocabulary {
 public:
  /// Canonicalizes and deduplicates. Throws Errc::kEmptyVocabulary.
  explicit DrugVocabulary(const std::vector<std::string>& names);

  bool contains(std::string_view canonical_name) const;
  const std::set<std::string, std::less<>>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::set<std::string, std::less<>> names_;
};

/// One drug name per line; blank lines ignored.
DrugVocabulary parse_drug_vocab(std::istream& in);
DrugVocabulary load_drug_vocab(const std::filesystem::path& file);

/// Trials sharing one intervention, split by outcome. Pointers refer into the
/// LabeledCorpus the index was built from, which must outlive the index.
struct InterventionEntry {
  std::vector<const LabeledTrial*> successes;
  std::vector<const LabeledTrial*> failures;

  const std::vector<const LabeledTrial*>& side(Outcome label) const {
    return label == Outcome::kSuccess ? successes : failures;
  }
};

class InterventionIndex {
 public:
  const std::map<std::string, InterventionEntry, std::less<>>& entries() const { return entries_; }
  const InterventionEntry* find(std::string_view name) const;
  bool empty() const { return entries_.empty(); }

 private:
  friend InterventionIndex index_by_intervention(const LabeledCorpus&, const DrugVocabulary&);
  std::map<std::string, InterventionEntry, std::less<>> entries_;
};

/// A trial listing several vocabulary drugs is indexed under each of them.
InterventionIndex index_by_intervention(const LabeledCorpus& corpus, const DrugVocabulary& vocab);

struct EligibleIntervention {
  std::string name;
  std::size_t success_count = 0;
  std::size_t failure_count = 0;
};

/// Interventions with at least min_pos successes and min_neg failures, sorted by name.
std::vector<EligibleIntervention> eligible_interventions(const InterventionIndex& index,
                                                         std::size_t min_pos = 3,
                                                         std::size_t min_neg = 3);

/// CSV "intervention,success_count,failure_count".
std::string eligibility_report_csv(const std::vector<EligibleIntervention>& eligible);

struct FewShotSet {
  std::string intervention;
  Outcome label = Outcome::kFailure;
  std::vector<const LabeledTrial*> examples;
  std::size_t total_tokens = 0;

  std::vector<std::string> example_ids() const;
};

struct SamplingOptions {
  std::size_t k = 3;
  std::size_t token_budget = kDefaultTokenBudget;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 5;
  TokenCounter count_tokens = estimate_tokens;
};

/// Draws k distinct same-label trials for `intervention`. Attempt i uses the
/// seed derived from (seed, i); a draw whose example block overflows the
/// token budget is redrawn until max_attempts is reached.
///
/// Throws Errc::kNotEnoughExamples or Errc::kTokenBudgetExhausted.
FewShotSet sample_few_shot(const InterventionIndex& index, std::string_view intervention,
                           Outcome label, const SamplingOptions& options);

}  // namespace trialsynth
