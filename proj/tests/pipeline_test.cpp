#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "expect_errc.hpp"
#include "support.hpp"
#include "trialsynth/pipeline.hpp"

namespace trialsynth {
namespace {

using testing::fixture;
using testing::mock_generation;

const std::string kReasons = "1. A 2. B 3. C 4. D 5. E";
const std::string kReport = "<study><drug>Aspirin</drug></study>";

std::vector<EligibleIntervention> eligible(std::initializer_list<const char*> names) {
  std::vector<EligibleIntervention> out;
  for (const char* n : names) out.push_back({n, 3, 3});
  return out;
}

GenerationPlan plan(std::size_t total, LabelPolicy policy = LabelPolicy::kAlternate) {
  GenerationPlan p;
  p.total_trials = total;
  p.label_policy = policy;
  return p;
}

struct Harness {
  std::shared_ptr<ScriptedTransport> transport;
  LlmClient client;
  GenerationSettings settings;

  explicit Harness(std::vector<std::string> script)
      : transport(ScriptedTransport::of(script)), client(transport, quiet()) {
    settings.clock = [] { return std::string(testing::kFixedClock); };
  }
  static ClientOptions quiet() {
    ClientOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
  }
  GenerationRun run(const GenerationPlan& p) {
    return run_generation(testing::fixture_corpus(), testing::fixture_vocab(), p, client,
                          settings);
  }
};

TEST(ScheduleUnits, RoundRobinAlternate) {
  auto units = schedule_units(eligible({"a", "b"}), plan(5));
  ASSERT_EQ(units.size(), 5u);
  std::vector<std::string> names;
  for (const auto& u : units) names.push_back(u.intervention);
  EXPECT_EQ(names, (std::vector<std::string>{"a", "b", "a", "b", "a"}));
  EXPECT_EQ(units[0].label, Outcome::kSuccess);
  EXPECT_EQ(units[1].label, Outcome::kSuccess);
  EXPECT_EQ(units[2].label, Outcome::kFailure);
  EXPECT_EQ(units[4].label, Outcome::kSuccess);
  EXPECT_EQ(units[4].pair_ordinal, 1u);
  for (std::size_t i = 0; i < units.size(); ++i) {
    EXPECT_EQ(units[i].index, i);
    EXPECT_EQ(units[i].seed, derive_seed(42, i));
  }
}

TEST(ScheduleUnits, BalancedFixedAndCap) {
  auto balanced = schedule_units(eligible({"a", "b"}), plan(4, LabelPolicy::kBalanced));
  EXPECT_EQ(balanced[0].label, Outcome::kSuccess);
  EXPECT_EQ(balanced[1].label, Outcome::kFailure);
  EXPECT_EQ(balanced[2].label, Outcome::kSuccess);

  auto fixed_plan = plan(3, LabelPolicy::kFixed);
  fixed_plan.fixed_label = Outcome::kFailure;
  for (const auto& u : schedule_units(eligible({"a"}), fixed_plan)) {
    EXPECT_EQ(u.label, Outcome::kFailure);
  }

  auto capped = plan(10);
  capped.per_intervention_cap = 2;
  EXPECT_EQ(schedule_units(eligible({"a", "b", "c"}), capped).size(), 6u);
  EXPECT_TRUE(schedule_units({}, plan(3)).empty());
  EXPECT_EQ(schedule_units(eligible({"a"}), plan(3)), schedule_units(eligible({"a"}), plan(3)));
}

TEST(RunGeneration, OnePerLabelWithProvenance) {
  auto corpus_real = testing::fixture_corpus();
  auto syn = mock_generation("mock_alternate.json", plan(2));
  ASSERT_EQ(syn.trials.size(), 2u);
  EXPECT_EQ(syn.intervention_names, std::vector<std::string>{"aspirin"});
  std::set<Outcome> labels;
  for (const auto& t : syn.trials) {
    labels.insert(t.label);
    EXPECT_EQ(t.intervention, "aspirin");
    EXPECT_NO_THROW(check_synthetic(t));
    EXPECT_EQ(t.provenance.reasons.size(), 5u);
    EXPECT_EQ(t.provenance.model_name, "gpt-4o-mini");
    EXPECT_EQ(t.provenance.temperature, 1.0);
    EXPECT_EQ(t.provenance.timestamp, testing::kFixedClock);
    ASSERT_EQ(t.provenance.example_ids.size(), 3u);
    for (const auto& id : t.provenance.example_ids) {
      const auto* real = corpus_real.find(id);
      ASSERT_TRUE(real) << id;
      EXPECT_EQ(real->label, t.label);
      EXPECT_EQ(real->record.intervention_names.front(), "aspirin");
    }
  }
  EXPECT_EQ(labels.size(), 2u);
  EXPECT_EQ(syn.trials[0].trial_id, "SYN-000001");
  EXPECT_EQ(syn.trials[1].trial_id, "SYN-000002");
}

TEST(RunGeneration, DeterministicAcrossRuns) {
  auto a = mock_generation("mock_alternate.json", plan(2));
  auto b = mock_generation("mock_alternate.json", plan(2));
  EXPECT_EQ(a, b);
  EXPECT_EQ(synthetic_to_jsonl(a), synthetic_to_jsonl(b));
}

TEST(RunGeneration, MalformedReasonsFailTheRun) {
  Harness h({"1. A 2. B 3. C 4. D"});
  EXPECT_ERRC(h.run(plan(1)), Errc::kAllUnitsFailed);
}

TEST(RunGeneration, NoEligibleInterventions) {
  Harness h({});
  h.settings.min_successes = 4;
  EXPECT_ERRC(h.run(plan(1)), Errc::kNoEligibleInterventions);
  EXPECT_EQ(h.transport->request_count(), 0u);
}

TEST(RunGeneration, UnitFailuresAreIsolated) {
  Harness h({kReasons, kReport, "<study>no drug named</study>", kReport});
  auto run = h.run(plan(3, LabelPolicy::kFixed));
  EXPECT_EQ(run.corpus.trials.size(), 2u);
  ASSERT_EQ(run.units.size(), 3u);
  EXPECT_TRUE(run.units[0].ok);
  EXPECT_FALSE(run.units[1].ok);
  EXPECT_EQ(run.units[1].error_code, to_string(Errc::kMissingIntervention));
  EXPECT_TRUE(run.units[2].ok);
  EXPECT_EQ(run.units[2].trial_id, "SYN-000002");
}

TEST(RunGeneration, ReasonsReusedAndDiversityFromSecondUnit) {
  Harness h({kReasons, kReport, kReport, kReport});
  h.run(plan(3, LabelPolicy::kFixed));
  auto requests = h.transport->requests();
  ASSERT_EQ(requests.size(), 4u);
  const std::string diversity =
      "Can you provide something more diverse compared to the previously generated reports?";
  EXPECT_NE(requests[0].prompt.find("Write 5 reasons leading"), std::string::npos);
  auto ends_with = [](const std::string& s, const std::string& tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
  };
  EXPECT_FALSE(ends_with(requests[1].prompt, diversity));
  EXPECT_TRUE(ends_with(requests[2].prompt, diversity));
  EXPECT_TRUE(ends_with(requests[3].prompt, diversity));

  Harness plain({kReasons, kReport, kReport});
  auto p = plan(2, LabelPolicy::kFixed);
  p.with_diversity = false;
  plain.run(p);
  EXPECT_FALSE(ends_with(plain.transport->requests()[2].prompt, diversity));
}

TEST(RunGeneration, ReasoningRetriedAfterBadList) {
  Harness h({"1. only one", kReasons, kReport});
  auto run = h.run(plan(2, LabelPolicy::kFixed));
  EXPECT_EQ(run.corpus.trials.size(), 1u);
  auto requests = h.transport->requests();
  ASSERT_EQ(requests.size(), 3u);
  EXPECT_NE(requests[1].prompt.find("previously generated reasons"), std::string::npos);
}

TEST(RunGeneration, ParallelWorkersMatchSerial) {
  // A content-addressed mock answers regardless of request order.
  std::map<std::string, std::string> by_hash;
  {
    Harness h({kReasons, kReport, kReasons, kReport});
    h.run(plan(2));
    auto requests = h.transport->requests();
    for (std::size_t i = 0; i < requests.size(); ++i) {
      by_hash[sha256_hex(requests[i].prompt)] = i % 2 == 0 ? kReasons : kReport;
    }
  }
  auto run_with = [&](std::size_t workers) {
    LlmClient client(std::make_shared<HashedTransport>(by_hash), Harness::quiet());
    GenerationSettings s;
    s.workers = workers;
    s.clock = [] { return std::string(testing::kFixedClock); };
    return run_generation(testing::fixture_corpus(), testing::fixture_vocab(), plan(2), client,
                          s)
        .corpus;
  };
  EXPECT_EQ(run_with(1), run_with(2));
}

TEST(RunManifest, CountsAndUnits) {
  Harness h({kReasons, kReport, "<x>nothing</x>"});
  auto p = plan(2, LabelPolicy::kFixed);
  auto run = h.run(p);
  nlohmann::ordered_json config = {{"seed", 42}};
  auto m = run_manifest(run, p, h.settings, config);
  EXPECT_EQ(m["counts"]["scheduled"], 2);
  EXPECT_EQ(m["counts"]["generated"], 1);
  EXPECT_EQ(m["counts"]["failed"], 1);
  EXPECT_EQ(m["seed"], 42);
  EXPECT_EQ(m["plan"]["label_policy"], "fixed");
  EXPECT_EQ(m["units"][1]["status"], "failed");
  EXPECT_EQ(m["config"], config);
}

TEST(ListSyntheticInterventions, SortedCanonical) {
  SyntheticCorpus c;
  for (const char* n : {"b", "a", "a", "Aspirin", "aspirin"}) {
    SyntheticTrial t;
    t.intervention = n;
    c.trials.push_back(t);
  }
  EXPECT_EQ(list_synthetic_interventions(c), (std::vector<std::string>{"a", "aspirin", "b"}));
  EXPECT_TRUE(list_synthetic_interventions({}).empty());
}

TEST(ExportSynthetic, RoundTripAndGolden) {
  auto syn = mock_generation("mock_alternate.json", plan(2));
  std::istringstream in(synthetic_to_jsonl(syn));
  EXPECT_EQ(synthetic_from_jsonl(in), syn);
  EXPECT_TRUE(testing::matches_golden("synthetic_two_trials.jsonl", synthetic_to_jsonl(syn)));

  const auto path = std::filesystem::temp_directory_path() / "trialsynth_export_test.jsonl";
  export_synthetic(syn, path);
  EXPECT_EQ(import_synthetic(path), syn);
  export_synthetic({}, path);
  EXPECT_EQ(read_file(path), "");
  EXPECT_TRUE(import_synthetic(path).trials.empty());
  std::filesystem::remove(path);
}

TEST(LabelPolicy, Names) {
  for (auto p : {LabelPolicy::kAlternate, LabelPolicy::kBalanced, LabelPolicy::kFixed}) {
    EXPECT_EQ(label_policy_from_string(to_string(p)), p);
  }
  EXPECT_ERRC(label_policy_from_string("random"), Errc::kUsageError);
}

}  // namespace
}  // namespace trialsynth
