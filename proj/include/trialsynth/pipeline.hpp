#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialsynth/corpus.hpp"
#include "trialsynth/llm.hpp"
#include "trialsynth/retrieval.hpp"

namespace trialsynth {

enum class LabelPolicy {
  kAlternate,  // per intervention: success, failure, success, ...
  kBalanced,   // across the whole run: unit i is success iff i is even
  kFixed,      // every unit uses GenerationPlan::fixed_label
};

std::string_view to_string(LabelPolicy policy);
LabelPolicy label_policy_from_string(std::string_view name);

struct GenerationPlan {
  std::size_t total_trials = 1;
  std::size_t per_intervention_cap = 0;  // 0: unlimited
  LabelPolicy label_policy = LabelPolicy::kAlternate;
  Outcome fixed_label = Outcome::kSuccess;
  std::uint64_t seed = 42;
  bool with_diversity = true;
};

struct GenerationSettings {
  std::string model_name = "gpt-4o-mini";
  double temperature = 1.0;
  std::size_t max_output_tokens = 0;
  std::size_t token_budget = kDefaultTokenBudget;
  std::size_t min_successes = 3;
  std::size_t min_failures = 3;
  std::size_t sample_attempts = 5;
  /// Pairs processed concurrently. Keep at 1 with a scripted (ordered) mock.
  std::size_t workers = 1;
  /// Timestamp stamped into provenance; defaults to the current UTC time.
  std::function<std::string()> clock;
};

struct ScheduledUnit {
  std::size_t index = 0;
  std::string intervention;
  Outcome label = Outcome::kSuccess;
  std::size_t pair_ordinal = 0;  // how many earlier units share (intervention, label)
  std::uint64_t seed = 0;

  bool operator==(const ScheduledUnit&) const = default;
};

/// Round-robin over `eligible` until plan.total_trials units are scheduled or
/// every intervention has hit per_intervention_cap.
std::vector<ScheduledUnit> schedule_units(const std::vector<EligibleIntervention>& eligible,
                                          const GenerationPlan& plan);

struct UnitStatus {
  ScheduledUnit unit;
  bool ok = false;
  std::string trial_id;
  std::string error_code;
  std::string message;
  std::vector<std::string> example_ids;
};

struct SyntheticCorpus {
  std::vector<SyntheticTrial> trials;
  std::vector<std::string> intervention_names;

  bool operator==(const SyntheticCorpus&) const = default;
};

struct GenerationRun {
  SyntheticCorpus corpus;
  std::vector<UnitStatus> units;
};

/// Retrieval -> reasoning -> generation for every scheduled unit. A unit that
/// fails is logged and skipped. Reasons are requested once per (intervention,
/// label) and reused; generation prompts carry the diversity request from the
/// second unit of a pair onward.
///
/// Throws Errc::kNoEligibleInterventions or Errc::kAllUnitsFailed.
GenerationRun run_generation(const LabeledCorpus& corpus, const DrugVocabulary& vocab,
                             const GenerationPlan& plan, const LlmClient& client,
                             const GenerationSettings& settings = {});

/// Sorted, deduplicated, canonicalized intervention names.
std::vector<std::string> list_synthetic_interventions(const SyntheticCorpus& corpus);

/// One {trial_id, text, label, intervention, provenance} object per line.
std::string synthetic_to_jsonl(const SyntheticCorpus& corpus);
void export_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& path);
SyntheticCorpus synthetic_from_jsonl(std::istream& in);
SyntheticCorpus import_synthetic(const std::filesystem::path& path);

/// Run manifest: plan, settings, counts and per-unit status, plus `config`.
nlohmann::ordered_json run_manifest(const GenerationRun& run, const GenerationPlan& plan,
                                    const GenerationSettings& settings,
                                    const nlohmann::ordered_json& config);

std::string utc_timestamp();

}  // namespace trialsynth
