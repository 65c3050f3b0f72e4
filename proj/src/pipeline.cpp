#include "trialsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "trialsynth/error.hpp"
#include "trialsynth/prompt.hpp"

namespace trialsynth {

std::string_view to_string(LabelPolicy policy) {
  switch (policy) {
    case LabelPolicy::kAlternate: return "alternate";
    case LabelPolicy::kBalanced: return "balanced";
    case LabelPolicy::kFixed: return "fixed";
  }
  return "alternate";
}

LabelPolicy label_policy_from_string(std::string_view name) {
  if (name == "alternate") return LabelPolicy::kAlternate;
  if (name == "balanced") return LabelPolicy::kBalanced;
  if (name == "fixed") return LabelPolicy::kFixed;
  throw Error(Errc::kUsageError, "unknown label policy '" + std::string(name) + "'");
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ScheduledUnit> schedule_units(const std::vector<EligibleIntervention>& eligible,
                                          const GenerationPlan& plan) {
  std::vector<ScheduledUnit> units;
  if (eligible.empty()) return units;

  std::vector<std::size_t> per_intervention(eligible.size(), 0);
  std::map<std::pair<std::string, Outcome>, std::size_t> per_pair;
  std::size_t cursor = 0;
  std::size_t idle = 0;  // consecutive capped interventions visited

  while (units.size() < plan.total_trials && idle < eligible.size()) {
    const std::size_t slot = cursor++ % eligible.size();
    if (plan.per_intervention_cap > 0 && per_intervention[slot] >= plan.per_intervention_cap) {
      ++idle;
      continue;
    }
    idle = 0;

    ScheduledUnit unit;
    unit.index = units.size();
    unit.intervention = eligible[slot].name;
    switch (plan.label_policy) {
      case LabelPolicy::kAlternate:
        unit.label = per_intervention[slot] % 2 == 0 ? Outcome::kSuccess : Outcome::kFailure;
        break;
      case LabelPolicy::kBalanced:
        unit.label = unit.index % 2 == 0 ? Outcome::kSuccess : Outcome::kFailure;
        break;
      case LabelPolicy::kFixed:
        unit.label = plan.fixed_label;
        break;
    }
    unit.pair_ordinal = per_pair[{unit.intervention, unit.label}]++;
    unit.seed = derive_seed(plan.seed, unit.index);
    ++per_intervention[slot];
    units.push_back(std::move(unit));
  }
  if (units.size() < plan.total_trials) {
    spdlog::warn("per-intervention cap limits the run to {} of {} requested trials",
                 units.size(), plan.total_trials);
  }
  return units;
}

namespace {

struct UnitResult {
  UnitStatus status;
  std::optional<SyntheticTrial> trial;
};

// Runs every unit of one (intervention, label) pair in schedule order.
class PairWorker {
 public:
  PairWorker(const InterventionIndex& index, const LlmClient& client,
             const GenerationPlan& plan, const GenerationSettings& settings)
      : index_(index), client_(client), plan_(plan), settings_(settings) {}

  UnitResult run(const ScheduledUnit& unit) {
    UnitResult result;
    result.status.unit = unit;
    try {
      if (!reasons_) reasons_ = request_reasons(unit);

      FewShotSet examples = sample(unit, 2);
      result.status.example_ids = examples.example_ids();
      PromptOptions options = prompt_options(plan_.with_diversity && unit.pair_ordinal > 0);
      std::string response = client_.complete(request(render(
          build_generation_prompt(examples, *reasons_, options))));

      Provenance provenance;
      provenance.example_ids = examples.example_ids();
      provenance.reasons = reasons_->reasons;
      provenance.model_name = settings_.model_name;
      provenance.temperature = settings_.temperature;
      provenance.seed = unit.seed;
      provenance.timestamp = settings_.clock ? settings_.clock() : utc_timestamp();
      result.trial = validate_report(response, unit.intervention, unit.label,
                                     std::move(provenance));
      result.status.ok = true;
    } catch (const Error& e) {
      result.status.error_code = std::string(to_string(e.code()));
      result.status.message = e.what();
      spdlog::warn("unit {} ({}, label {}) skipped: {}: {}", unit.index, unit.intervention,
                   to_int(unit.label), result.status.error_code, result.status.message);
    }
    return result;
  }

 private:
  ReasonSet request_reasons(const ScheduledUnit& unit) {
    FewShotSet examples = sample(unit, 1);
    PromptOptions options = prompt_options(plan_.with_diversity && reasoning_attempts_ > 0);
    ++reasoning_attempts_;
    std::string response =
        client_.complete(request(render(build_reasoning_prompt(examples, options))));
    return parse_reasons(response, unit.intervention, unit.label);
  }

  FewShotSet sample(const ScheduledUnit& unit, std::uint64_t stream) const {
    SamplingOptions options;
    options.token_budget = settings_.token_budget;
    options.seed = derive_seed(unit.seed, stream);
    options.max_attempts = settings_.sample_attempts;
    return sample_few_shot(index_, unit.intervention, unit.label, options);
  }

  PromptOptions prompt_options(bool with_diversity) const {
    PromptOptions options;
    options.with_diversity = with_diversity;
    options.token_budget = settings_.token_budget;
    return options;
  }

  CompletionRequest request(std::string prompt) const {
    CompletionRequest req;
    req.prompt = std::move(prompt);
    req.temperature = settings_.temperature;
    req.model_name = settings_.model_name;
    req.max_output_tokens = settings_.max_output_tokens;
    return req;
  }

  const InterventionIndex& index_;
  const LlmClient& client_;
  const GenerationPlan& plan_;
  const GenerationSettings& settings_;
  std::optional<ReasonSet> reasons_;
  std::size_t reasoning_attempts_ = 0;
};

}  // namespace

GenerationRun run_generation(const LabeledCorpus& corpus, const DrugVocabulary& vocab,
                             const GenerationPlan& plan, const LlmClient& client,
                             const GenerationSettings& settings) {
  const InterventionIndex index = index_by_intervention(corpus, vocab);
  const auto eligible =
      eligible_interventions(index, settings.min_successes, settings.min_failures);
  if (eligible.empty()) {
    throw Error(Errc::kNoEligibleInterventions,
                "no vocabulary intervention has enough successes and failures");
  }
  const auto units = schedule_units(eligible, plan);

  // Group unit indices by pair, in order of first appearance.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::pair<std::string, Outcome>, std::size_t> group_of;
  for (const auto& unit : units) {
    auto [it, inserted] = group_of.try_emplace({unit.intervention, unit.label}, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(unit.index);
  }

  std::vector<UnitResult> results(units.size());
  std::atomic<std::size_t> next_group{0};
  auto drain = [&] {
    for (std::size_t g = next_group++; g < groups.size(); g = next_group++) {
      PairWorker worker(index, client, plan, settings);
      for (std::size_t u : groups[g]) results[u] = worker.run(units[u]);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(settings.workers, 1, groups.size());
  if (workers == 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
  }

  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(units[a].intervention, units[a].label, a) <
           std::tie(units[b].intervention, units[b].label, b);
  });

  GenerationRun run;
  SyntheticIdCounter ids;
  for (std::size_t u : order) {
    if (!results[u].trial) continue;
    SyntheticTrial trial = std::move(*results[u].trial);
    trial.trial_id = ids.next();
    results[u].status.trial_id = trial.trial_id;
    run.corpus.trials.push_back(std::move(trial));
  }
  for (auto& r : results) run.units.push_back(std::move(r.status));
  run.corpus.intervention_names = list_synthetic_interventions(run.corpus);

  if (!units.empty() && run.corpus.trials.empty()) {
    throw Error(Errc::kAllUnitsFailed,
                "all " + std::to_string(units.size()) + " generation units failed");
  }
  return run;
}

std::vector<std::string> list_synthetic_interventions(const SyntheticCorpus& corpus) {
  std::vector<std::string> names;
  for (const auto& trial : corpus.trials) names.push_back(canonicalize_name(trial.intervention));
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::string synthetic_to_jsonl(const SyntheticCorpus& corpus) {
  std::string out;
  for (const auto& trial : corpus.trials) {
    nlohmann::ordered_json provenance;
    provenance["example_ids"] = trial.provenance.example_ids;
    provenance["reasons"] = trial.provenance.reasons;
    provenance["model_name"] = trial.provenance.model_name;
    provenance["temperature"] = trial.provenance.temperature;
    provenance["seed"] = trial.provenance.seed;
    provenance["timestamp"] = trial.provenance.timestamp;

    nlohmann::ordered_json row;
    row["trial_id"] = trial.trial_id;
    row["text"] = trial.text;
    row["label"] = to_int(trial.label);
    row["intervention"] = trial.intervention;
    row["provenance"] = std::move(provenance);
    out += row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void export_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& path) {
  write_file(path, synthetic_to_jsonl(corpus));
}

SyntheticCorpus synthetic_from_jsonl(std::istream& in) {
  SyntheticCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto row = nlohmann::json::parse(line);
      SyntheticTrial trial;
      trial.trial_id = row.at("trial_id").get<std::string>();
      trial.text = row.at("text").get<std::string>();
      trial.label = outcome_from_int(row.at("label").get<long long>());
      trial.intervention = row.at("intervention").get<std::string>();
      const auto& p = row.at("provenance");
      trial.provenance.example_ids = p.at("example_ids").get<std::vector<std::string>>();
      trial.provenance.reasons = p.at("reasons").get<std::vector<std::string>>();
      trial.provenance.model_name = p.at("model_name").get<std::string>();
      trial.provenance.temperature = p.at("temperature").get<double>();
      trial.provenance.seed = p.at("seed").get<std::uint64_t>();
      trial.provenance.timestamp = p.at("timestamp").get<std::string>();
      corpus.trials.push_back(std::move(trial));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError,
                  "synthetic corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  corpus.intervention_names = list_synthetic_interventions(corpus);
  return corpus;
}

SyntheticCorpus import_synthetic(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  return synthetic_from_jsonl(in);
}

nlohmann::ordered_json run_manifest(const GenerationRun& run, const GenerationPlan& plan,
                                    const GenerationSettings& settings,
                                    const nlohmann::ordered_json& config) {
  nlohmann::ordered_json m;
  m["plan"] = {{"total_trials", plan.total_trials},
               {"per_intervention_cap", plan.per_intervention_cap},
               {"label_policy", to_string(plan.label_policy)},
               {"fixed_label", to_int(plan.fixed_label)},
               {"with_diversity", plan.with_diversity}};
  m["seed"] = plan.seed;
  m["model_name"] = settings.model_name;
  m["temperature"] = settings.temperature;

  std::size_t ok = 0;
  nlohmann::ordered_json units = nlohmann::ordered_json::array();
  for (const auto& s : run.units) {
    ok += s.ok ? 1 : 0;
    nlohmann::ordered_json u;
    u["unit"] = s.unit.index;
    u["intervention"] = s.unit.intervention;
    u["label"] = to_int(s.unit.label);
    u["status"] = s.ok ? "ok" : "failed";
    if (s.ok) {
      u["trial_id"] = s.trial_id;
    } else {
      u["error"] = s.error_code;
      u["message"] = s.message;
    }
    u["example_ids"] = s.example_ids;
    units.push_back(std::move(u));
  }
  m["counts"] = {{"scheduled", run.units.size()},
                 {"generated", ok},
                 {"failed", run.units.size() - ok},
                 {"interventions", run.corpus.intervention_names.size()}};
  m["units"] = std::move(units);
  m["config"] = config;
  return m;
}

}  // namespace trialsynth
