#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trialsynth/corpus.hpp"
#include "trialsynth/pipeline.hpp"

namespace trialsynth {

enum class Origin { kReal, kSynthetic };

/// A reference to one training/evaluation example.
struct Item {
  std::string id;
  Outcome label = Outcome::kFailure;
  Origin origin = Origin::kReal;

  bool operator==(const Item&) const = default;
};

std::vector<Item> items_of(const LabeledCorpus& corpus);
std::vector<Item> items_of(const SyntheticCorpus& corpus);

/// Real trials split by whether any intervention appears in the synthetic
/// corpus (set_a) or none does (set_b).
struct AbPartition {
  std::vector<Item> set_a;
  std::vector<Item> set_b;
};

AbPartition partition_ab(const LabeledCorpus& corpus,
                         const std::vector<std::string>& synthetic_names);

struct TrainValTest {
  std::vector<Item> train;
  std::vector<Item> val;
  std::vector<Item> test;
};

/// Seeded shuffle, then floor(0.6n) / floor(0.2n) / remainder.
/// Throws Errc::kTooFewItems when n < 5.
TrainValTest split_60_20_20(std::vector<Item> items, std::uint64_t seed);

/// floor(fraction * train_size), tolerant of binary rounding just below an integer.
std::size_t synthetic_share(double fraction, std::size_t train_size);

inline const std::vector<double> kDefaultRatios = {1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
inline constexpr std::size_t kRatioTrainSize = 3358;
inline constexpr std::size_t kRatioEvalSize = 1349;

struct RatioMix {
  double synthetic_fraction = 0.0;
  std::vector<Item> train;
  std::size_t synthetic_count = 0;
  std::size_t real_count = 0;
};

/// One training set per fraction, in the given order. Each pool is shuffled
/// once per seed and mixes take prefixes, so smaller shares nest inside larger.
/// Throws Errc::kPoolTooSmall.
std::vector<RatioMix> build_ratio_mixes(const std::vector<Item>& synthetic_pool,
                                        const std::vector<Item>& real_pool,
                                        std::size_t train_size = kRatioTrainSize,
                                        const std::vector<double>& ratios = kDefaultRatios,
                                        std::uint64_t seed = 0);

/// Majority class sampled down to the minority size; output keeps input order.
/// Throws Errc::kSingleClass.
std::vector<Item> downsample_balance(const std::vector<Item>& items, std::uint64_t seed);

/// Seeded order in which every prefix is close to the label proportions of
/// `items` (classes are shuffled, then interleaved by relative rank).
std::vector<Item> stratified_order(const std::vector<Item>& items, std::uint64_t seed);

struct SplitSpec {
  std::string name;
  std::vector<Item> train;
  std::vector<Item> val;
  std::vector<Item> test;
  std::size_t synthetic_count = 0;
  std::size_t real_count = 0;
  std::uint64_t seed = 0;
};

enum class ExperimentKind { kInDistribution, kRatio, kGeneralization };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct ExperimentOptions {
  std::size_t ratio_train_size = kRatioTrainSize;
  std::size_t ratio_eval_size = kRatioEvalSize;
  std::vector<double> ratios = kDefaultRatios;
};

/// in_distribution: synthetic_only / real_only / hybrid over a 60/20/20 split of A.
/// ratio: one spec per fraction; val/test are stratified draws from A, and the
///        real share comes from the rest of A.
/// generalization: train from A and/or synthetic; val/test are the two halves
///        of class-balanced B.
std::vector<SplitSpec> build_experiment(ExperimentKind kind, const AbPartition& partition,
                                        const std::vector<Item>& synthetic,
                                        std::uint64_t seed,
                                        const ExperimentOptions& options = {});

/// Throws Errc::kOverlappingSplits if any id is in two of train/val/test, or
/// if the composition counts disagree with the train set.
void check_split(const SplitSpec& spec);

/// {name, train:[ids], val:[ids], test:[ids], composition, seed}
nlohmann::ordered_json split_manifest(const SplitSpec& spec);

}  // namespace trialsynth
