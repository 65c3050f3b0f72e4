#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "expect_errc.hpp"
#include "support.hpp"
#include "trialsynth/datasets.hpp"

namespace trialsynth {
namespace {

using testing::item;
using testing::numbered_items;

std::set<std::string> ids(const std::vector<Item>& items) {
  std::set<std::string> out;
  for (const auto& i : items) out.insert(i.id);
  return out;
}

std::size_t count_label(const std::vector<Item>& items, Outcome label) {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const Item& i) { return i.label == label; }));
}

LabeledTrial trial(const std::string& id, std::vector<std::string> drugs, int label = 1) {
  LabeledTrial t;
  t.record.trial_id = id;
  t.record.intervention_names = std::move(drugs);
  t.label = outcome_from_int(label);
  return t;
}

TEST(PartitionAb, Membership) {
  LabeledCorpus corpus({trial("NCT1", {"aspirin"}), trial("NCT2", {"ibuprofen", "aspirin"}),
                        trial("NCT3", {"ibuprofen"}), trial("NCT4", {}),
                        trial("NCT5", {"placebo"})});
  auto p = partition_ab(corpus, {"Aspirin"});
  EXPECT_EQ(ids(p.set_a), (std::set<std::string>{"NCT1", "NCT2"}));
  EXPECT_EQ(p.set_b.size(), 3u);
  auto none = partition_ab(corpus, {});
  EXPECT_TRUE(none.set_a.empty());
  EXPECT_EQ(none.set_b.size(), 5u);
}

TEST(Split602020, Sizes) {
  for (auto [n, tr, va, te] : std::vector<std::array<std::size_t, 4>>{
           {6056, 3633, 1211, 1212}, {10, 6, 2, 2}, {5, 3, 1, 1}, {7, 4, 1, 2}}) {
    auto s = split_60_20_20(numbered_items("R", n), 1);
    EXPECT_EQ(s.train.size(), tr) << n;
    EXPECT_EQ(s.val.size(), va) << n;
    EXPECT_EQ(s.test.size(), te) << n;
  }
  EXPECT_ERRC(split_60_20_20(numbered_items("R", 4), 1), Errc::kTooFewItems);
}

TEST(Split602020, DisjointCoveringDeterministic) {
  auto items = numbered_items("R", 101);
  auto a = split_60_20_20(items, 40);
  auto b = split_60_20_20(items, 40);
  auto c = split_60_20_20(items, 41);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
  std::set<std::string> all = ids(a.train);
  for (const auto& v : {a.val, a.test}) {
    for (const auto& i : v) EXPECT_TRUE(all.insert(i.id).second);
  }
  EXPECT_EQ(all, ids(items));
}

TEST(SyntheticShare, FloorRule) {
  EXPECT_EQ(synthetic_share(0.8, 3358), 2686u);
  EXPECT_EQ(synthetic_share(0.2, 3358), 671u);
  EXPECT_EQ(synthetic_share(0.6, 3358), 2014u);
  EXPECT_EQ(synthetic_share(0.4, 3358), 1343u);
  EXPECT_EQ(synthetic_share(1.0, 3358), 3358u);
  EXPECT_EQ(synthetic_share(0.0, 3358), 0u);
  EXPECT_EQ(synthetic_share(0.7, 10), 7u);
}

TEST(RatioMixes, CountsAndNesting) {
  auto syn = numbered_items("SYN-", 3358, Origin::kSynthetic);
  auto real = numbered_items("NCT", 3358);
  auto mixes = build_ratio_mixes(syn, real, 3358, kDefaultRatios, 7);
  ASSERT_EQ(mixes.size(), 6u);
  const std::vector<std::size_t> expected = {3358, 2686, 2014, 1343, 671, 0};
  for (std::size_t i = 0; i < mixes.size(); ++i) {
    const auto& m = mixes[i];
    EXPECT_EQ(m.synthetic_count, expected[i]);
    EXPECT_EQ(m.real_count, 3358 - expected[i]);
    EXPECT_EQ(m.train.size(), 3358u);
    EXPECT_LT(std::abs(static_cast<double>(m.synthetic_count) - m.synthetic_fraction * 3358), 1.0);
    std::size_t syn_seen = 0;
    for (const auto& it : m.train) syn_seen += it.origin == Origin::kSynthetic ? 1 : 0;
    EXPECT_EQ(syn_seen, m.synthetic_count);
    EXPECT_EQ(ids(m.train).size(), m.train.size());
  }
  auto again = build_ratio_mixes(syn, real, 3358, kDefaultRatios, 7);
  EXPECT_EQ(again[2].train, mixes[2].train);
  EXPECT_ERRC(build_ratio_mixes(numbered_items("S", 10), real, 3358), Errc::kPoolTooSmall);
  EXPECT_ERRC(build_ratio_mixes(syn, numbered_items("R", 10), 3358), Errc::kPoolTooSmall);
}

TEST(DownsampleBalance, Cases) {
  auto forced = downsample_balance({item("a", 1), item("b", 1), item("c", 1), item("d", 0)}, 3);
  EXPECT_EQ(forced.size(), 2u);
  EXPECT_EQ(count_label(forced, Outcome::kSuccess), 1u);
  EXPECT_TRUE(ids(forced).count("d"));

  std::vector<Item> balanced = {item("a", 1), item("b", 0), item("c", 1), item("d", 0)};
  EXPECT_EQ(ids(downsample_balance(balanced, 3)), ids(balanced));

  EXPECT_ERRC(downsample_balance({item("a", 1), item("b", 1)}, 0), Errc::kSingleClass);

  std::vector<Item> skewed;
  for (int i = 0; i < 50; ++i) skewed.push_back(item("N" + std::to_string(i), i < 13 ? 0 : 1));
  auto out = downsample_balance(skewed, 9);
  EXPECT_EQ(count_label(out, Outcome::kSuccess), 13u);
  EXPECT_EQ(count_label(out, Outcome::kFailure), 13u);
}

TEST(StratifiedOrder, PrefixesTrackProportions) {
  std::vector<Item> items;
  for (int i = 0; i < 100; ++i) items.push_back(item("N" + std::to_string(i), i < 30 ? 1 : 0));
  auto order = stratified_order(items, 4);
  EXPECT_EQ(ids(order), ids(items));
  for (std::size_t k = 10; k <= order.size(); k += 10) {
    std::vector<Item> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    const double pos = static_cast<double>(count_label(prefix, Outcome::kSuccess));
    EXPECT_LE(std::abs(pos - 0.3 * static_cast<double>(k)), 1.0) << k;
  }
}

/// A (20 items) and B (31 items, 11 positive) over a synthetic set of 10.
struct FixtureScale {
  AbPartition partition;
  std::vector<Item> synthetic = numbered_items("SYN-", 10, Origin::kSynthetic);
  FixtureScale() {
    partition.set_a = numbered_items("NCTA", 20);
    for (int i = 0; i < 31; ++i) partition.set_b.push_back(item("NCTB" + std::to_string(i), i < 11));
  }
};

TEST(BuildExperiment, InDistribution) {
  FixtureScale f;
  auto specs = build_experiment(ExperimentKind::kInDistribution, f.partition, f.synthetic, 40);
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_EQ(specs[0].name, "in_distribution.synthetic_only");
  EXPECT_EQ(specs[0].train.size(), 10u);
  EXPECT_EQ(specs[1].train.size(), 12u);
  EXPECT_EQ(specs[2].name, "in_distribution.hybrid");
  EXPECT_EQ(specs[2].train.size(), 22u);
  EXPECT_EQ(specs[2].synthetic_count, 10u);
  EXPECT_EQ(specs[2].real_count, 12u);
  for (const auto& s : specs) {
    EXPECT_NO_THROW(check_split(s));
    EXPECT_EQ(s.val, specs[0].val);
    EXPECT_EQ(s.test, specs[0].test);
    EXPECT_EQ(s.val.size(), 4u);
  }
  auto real_train = ids(specs[1].train);
  for (const auto& it : specs[2].train) {
    if (it.origin == Origin::kReal) {
      EXPECT_TRUE(real_train.count(it.id));
    }
  }
}

TEST(BuildExperiment, Ratio) {
  FixtureScale f;
  ExperimentOptions o;
  o.ratio_train_size = 10;
  o.ratio_eval_size = 5;
  auto specs = build_experiment(ExperimentKind::kRatio, f.partition, f.synthetic, 41, o);
  ASSERT_EQ(specs.size(), 6u);
  EXPECT_EQ(specs[0].name, "ratio.syn100_real0");
  EXPECT_EQ(specs[1].name, "ratio.syn80_real20");
  EXPECT_EQ(specs[5].name, "ratio.syn0_real100");
  for (const auto& s : specs) {
    EXPECT_NO_THROW(check_split(s));
    EXPECT_EQ(s.train.size(), 10u);
    EXPECT_EQ(s.val.size(), 5u);
    EXPECT_EQ(s.test.size(), 5u);
    EXPECT_EQ(s.val, specs[0].val);
  }
  o.ratio_eval_size = 11;
  EXPECT_ERRC(build_experiment(ExperimentKind::kRatio, f.partition, f.synthetic, 41, o),
              Errc::kPoolTooSmall);
}

TEST(BuildExperiment, Generalization) {
  FixtureScale f;
  auto specs = build_experiment(ExperimentKind::kGeneralization, f.partition, f.synthetic, 42);
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_EQ(specs[2].train.size(), 30u);
  EXPECT_EQ(specs[1].train.size(), 20u);
  const auto& s = specs[2];
  EXPECT_EQ(s.val.size(), 11u);
  EXPECT_EQ(s.test.size(), 11u);
  EXPECT_EQ(count_label(s.val, Outcome::kSuccess) + count_label(s.test, Outcome::kSuccess), 11u);
  for (const auto& spec : specs) EXPECT_NO_THROW(check_split(spec));
}

TEST(CheckSplit, DetectsOverlapAndBadComposition) {
  SplitSpec s;
  s.name = "x";
  s.train = {item("a", 1)};
  s.val = {item("a", 1)};
  s.real_count = 1;
  EXPECT_ERRC(check_split(s), Errc::kOverlappingSplits);
  s.val = {item("b", 1)};
  EXPECT_NO_THROW(check_split(s));
  s.real_count = 2;
  EXPECT_ERRC(check_split(s), Errc::kOverlappingSplits);
}

TEST(SplitManifest, Shape) {
  SplitSpec s;
  s.name = "in_distribution.hybrid";
  s.train = {item("SYN-000001", 1, Origin::kSynthetic), item("NCT1", 0)};
  s.val = {item("NCT2", 1)};
  s.test = {item("NCT3", 0)};
  s.synthetic_count = 1;
  s.real_count = 1;
  s.seed = 40;
  EXPECT_EQ(split_manifest(s).dump(),
            R"({"name":"in_distribution.hybrid","train":["SYN-000001","NCT1"],"val":["NCT2"],)"
            R"("test":["NCT3"],"composition":{"synthetic":1,"real":1},"seed":40})");
}

TEST(ExperimentKind, Names) {
  for (auto k : {ExperimentKind::kInDistribution, ExperimentKind::kRatio,
                 ExperimentKind::kGeneralization}) {
    EXPECT_EQ(experiment_kind_from_string(to_string(k)), k);
  }
  EXPECT_ERRC(experiment_kind_from_string("temporal"), Errc::kUsageError);
}

TEST(ItemsOf, Origins) {
  auto real = items_of(testing::fixture_corpus());
  EXPECT_EQ(real.size(), 12u);
  EXPECT_EQ(real.front().origin, Origin::kReal);
  SyntheticCorpus syn;
  syn.trials.push_back({"SYN-000001", "t", "aspirin", Outcome::kSuccess, {}});
  EXPECT_EQ(items_of(syn), (std::vector<Item>{item("SYN-000001", 1, Origin::kSynthetic)}));
}

}  // namespace
}  // namespace trialsynth
