#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "trialsynth/common.hpp"
#include "trialsynth/corpus.hpp"
#include "trialsynth/datasets.hpp"
#include "trialsynth/error.hpp"
#include "trialsynth/llm.hpp"
#include "trialsynth/metrics.hpp"
#include "trialsynth/pipeline.hpp"
#include "trialsynth/prompt.hpp"
#include "trialsynth/reasons.hpp"
#include "trialsynth/retrieval.hpp"

namespace trialsynth::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(TRIALSYNTH_FIXTURE_DIR) / rel;
}

/// Compares `actual` with a golden file. With TRIALSYNTH_UPDATE_GOLDENS set the
/// file is rewritten instead and the comparison passes.
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const auto path = fixture("golden/" + name);
  if (std::getenv("TRIALSYNTH_UPDATE_GOLDENS") != nullptr) {
    write_file(path, actual);
    return true;
  }
  if (!std::filesystem::exists(path)) return false;
  return read_file(path) == actual;
}

inline LabeledCorpus fixture_corpus() {
  return build_labeled_corpus(load_xml_directory(fixture("xml")),
                              load_labels(fixture("labels.csv")));
}

inline DrugVocabulary fixture_vocab() { return load_drug_vocab(fixture("vocab.txt")); }

/// Holds the corpus and index a FewShotSet points into.
struct FewShotFixture {
  LabeledCorpus corpus = fixture_corpus();
  InterventionIndex index = index_by_intervention(corpus, fixture_vocab());

  FewShotSet aspirin(Outcome label) const {
    SamplingOptions options;
    options.seed = 42;
    return sample_few_shot(index, "aspirin", label, options);
  }
};

inline ReasonSet fixture_reasons(Outcome label) {
  return {"aspirin", label,
          {"Platelet inhibition was consistent at the studied dose.",
           "Endpoints were aligned with the mechanism of action.",
           "Bleeding risk was controlled by the eligibility criteria.",
           "Adherence stayed high across study visits.",
           "The sample size gave adequate statistical power."}};
}

inline constexpr const char* kFixedClock = "2024-01-01T00:00:00Z";

/// Fixture generation run against a scripted mock file. `client_requests`
/// receives the transport's request count when given.
inline SyntheticCorpus mock_generation(const std::string& mock_file, const GenerationPlan& plan,
                                       std::size_t* client_requests = nullptr) {
  auto transport = load_mock_transport(fixture(mock_file));
  ClientOptions options;
  options.sleep = [](std::chrono::milliseconds) {};
  LlmClient client(transport, options);
  GenerationSettings settings;
  settings.clock = [] { return std::string(kFixedClock); };
  auto run = run_generation(fixture_corpus(), fixture_vocab(), plan, client, settings);
  if (client_requests) *client_requests = transport->request_count();
  return run.corpus;
}

inline Item item(std::string id, int label, Origin origin = Origin::kReal) {
  return {std::move(id), outcome_from_int(label), origin};
}

inline std::vector<Item> numbered_items(const std::string& prefix, std::size_t n,
                                        Origin origin = Origin::kReal) {
  std::vector<Item> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(item(prefix + std::to_string(i), static_cast<int>(i % 2), origin));
  }
  return out;
}

inline std::vector<PredictionRecord> preds(const std::vector<int>& labels,
                                           const std::vector<double>& scores) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back({"P" + std::to_string(i), outcome_from_int(labels[i]), scores[i]});
  }
  return out;
}

}  // namespace trialsynth::testing
