#include "trialsynth/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <random>

#include "trialsynth/error.hpp"

namespace trialsynth {

DrugVocabulary::DrugVocabulary(const std::vector<std::string>& names) {
  for (const auto& name : names) {
    std::string canon = canonicalize_name(name);
    if (!canon.empty()) names_.insert(std::move(canon));
  }
  if (names_.empty()) throw Error(Errc::kEmptyVocabulary, "drug vocabulary is empty");
}

bool DrugVocabulary::contains(std::string_view canonical_name) const {
  return names_.find(canonical_name) != names_.end();
}

DrugVocabulary parse_drug_vocab(std::istream& in) {
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) names.push_back(line);
  return DrugVocabulary(names);
}

DrugVocabulary load_drug_vocab(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::kIoError, "cannot open " + file.string());
  return parse_drug_vocab(in);
}

const InterventionEntry* InterventionIndex::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

InterventionIndex index_by_intervention(const LabeledCorpus& corpus,
                                        const DrugVocabulary& vocab) {
  InterventionIndex index;
  for (const auto& trial : corpus.trials()) {
    for (const auto& name : trial.record.intervention_names) {
      if (!vocab.contains(name)) continue;
      auto& entry = index.entries_[name];
      auto& side = trial.label == Outcome::kSuccess ? entry.successes : entry.failures;
      side.push_back(&trial);
    }
  }
  return index;
}

std::vector<EligibleIntervention> eligible_interventions(const InterventionIndex& index,
                                                         std::size_t min_pos,
                                                         std::size_t min_neg) {
  std::vector<EligibleIntervention> out;
  for (const auto& [name, entry] : index.entries()) {
    if (entry.successes.size() >= min_pos && entry.failures.size() >= min_neg) {
      out.push_back({name, entry.successes.size(), entry.failures.size()});
    }
  }
  return out;  // std::map iteration order is already lexicographic
}

std::string eligibility_report_csv(const std::vector<EligibleIntervention>& eligible) {
  std::string out = "intervention,success_count,failure_count\n";
  for (const auto& e : eligible) {
    out += e.name;
    out += ',' + std::to_string(e.success_count) + ',' + std::to_string(e.failure_count) + '\n';
  }
  return out;
}

std::vector<std::string> FewShotSet::example_ids() const {
  std::vector<std::string> ids;
  ids.reserve(examples.size());
  for (const auto* trial : examples) ids.push_back(trial->id());
  return ids;
}

FewShotSet sample_few_shot(const InterventionIndex& index, std::string_view intervention,
                           Outcome label, const SamplingOptions& options) {
  const InterventionEntry* entry = index.find(intervention);
  const std::size_t available = entry ? entry->side(label).size() : 0;
  if (entry == nullptr || available < options.k) {
    throw Error(Errc::kNotEnoughExamples,
                "intervention '" + std::string(intervention) + "' has " +
                    std::to_string(available) + " trials with label " +
                    std::to_string(to_int(label)) + ", need " + std::to_string(options.k));
  }
  const auto& pool = entry->side(label);

  std::size_t smallest = 0;
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(options.seed, attempt));
    FewShotSet set{std::string(intervention), label, {}, 0};
    std::sample(pool.begin(), pool.end(), std::back_inserter(set.examples), options.k, rng);

    for (const auto* trial : set.examples) {
      set.total_tokens += options.count_tokens(example_segment_text(label, trial->text));
    }
    if (set.total_tokens <= options.token_budget) return set;
    smallest = attempt == 0 ? set.total_tokens : std::min(smallest, set.total_tokens);
  }
  throw Error(Errc::kTokenBudgetExhausted,
              "no few-shot draw for '" + std::string(intervention) + "' fits " +
                  std::to_string(options.token_budget) + " tokens after " +
                  std::to_string(options.max_attempts) + " attempts (smallest " +
                  std::to_string(smallest) + ")");
}

}  // namespace trialsynth
