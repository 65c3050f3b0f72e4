#include "trialsynth/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

#include "trialsynth/error.hpp"

namespace trialsynth {

namespace {

std::size_t count_origin(const std::vector<Item>& items, Origin origin) {
  return static_cast<std::size_t>(std::count_if(
      items.begin(), items.end(), [origin](const Item& it) { return it.origin == origin; }));
}

std::vector<Item> concat(std::vector<Item> a, const std::vector<Item>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string percent(double fraction) {
  return std::to_string(static_cast<int>(std::lround(fraction * 100.0)));
}

SplitSpec make_spec(std::string name, std::vector<Item> train, const std::vector<Item>& val,
                    const std::vector<Item>& test, std::uint64_t seed) {
  SplitSpec spec;
  spec.name = std::move(name);
  spec.synthetic_count = count_origin(train, Origin::kSynthetic);
  spec.real_count = count_origin(train, Origin::kReal);
  spec.train = std::move(train);
  spec.val = val;
  spec.test = test;
  spec.seed = seed;
  check_split(spec);
  return spec;
}

}  // namespace

std::vector<Item> items_of(const LabeledCorpus& corpus) {
  std::vector<Item> items;
  items.reserve(corpus.size());
  for (const auto& t : corpus.trials()) items.push_back({t.id(), t.label, Origin::kReal});
  return items;
}

std::vector<Item> items_of(const SyntheticCorpus& corpus) {
  std::vector<Item> items;
  items.reserve(corpus.trials.size());
  for (const auto& t : corpus.trials) items.push_back({t.trial_id, t.label, Origin::kSynthetic});
  return items;
}

AbPartition partition_ab(const LabeledCorpus& corpus,
                         const std::vector<std::string>& synthetic_names) {
  std::set<std::string> names;
  for (const auto& n : synthetic_names) names.insert(canonicalize_name(n));

  AbPartition partition;
  for (const auto& trial : corpus.trials()) {
    const auto& interventions = trial.record.intervention_names;
    bool in_a = std::any_of(interventions.begin(), interventions.end(), [&](const auto& n) {
      return names.count(canonicalize_name(n)) > 0;
    });
    (in_a ? partition.set_a : partition.set_b).push_back({trial.id(), trial.label, Origin::kReal});
  }
  return partition;
}

TrainValTest split_60_20_20(std::vector<Item> items, std::uint64_t seed) {
  const std::size_t n = items.size();
  if (n < 5) {
    throw Error(Errc::kTooFewItems, "60/20/20 split needs at least 5 items, got " +
                                        std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);

  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_val = n * 2 / 10;
  TrainValTest out;
  out.train.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(items.begin() + static_cast<std::ptrdiff_t>(n_train),
                 items.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(items.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), items.end());
  return out;
}

std::size_t synthetic_share(double fraction, std::size_t train_size) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(Errc::kOutOfRange, "synthetic fraction must lie in [0, 1]");
  }
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(train_size) + 1e-9));
}

std::vector<RatioMix> build_ratio_mixes(const std::vector<Item>& synthetic_pool,
                                        const std::vector<Item>& real_pool,
                                        std::size_t train_size,
                                        const std::vector<double>& ratios,
                                        std::uint64_t seed) {
  std::size_t need_syn = 0;
  std::size_t need_real = 0;
  for (double f : ratios) {
    std::size_t s = synthetic_share(f, train_size);
    need_syn = std::max(need_syn, s);
    need_real = std::max(need_real, train_size - s);
  }
  if (synthetic_pool.size() < need_syn || real_pool.size() < need_real) {
    throw Error(Errc::kPoolTooSmall,
                "ratio mixes need " + std::to_string(need_syn) + " synthetic and " +
                    std::to_string(need_real) + " real items, have " +
                    std::to_string(synthetic_pool.size()) + " and " +
                    std::to_string(real_pool.size()));
  }

  std::vector<Item> syn = synthetic_pool;
  std::vector<Item> real = real_pool;
  std::mt19937_64 syn_rng(derive_seed(seed, 0));
  std::mt19937_64 real_rng(derive_seed(seed, 1));
  std::shuffle(syn.begin(), syn.end(), syn_rng);
  std::shuffle(real.begin(), real.end(), real_rng);

  std::vector<RatioMix> mixes;
  for (double f : ratios) {
    RatioMix mix;
    mix.synthetic_fraction = f;
    mix.synthetic_count = synthetic_share(f, train_size);
    mix.real_count = train_size - mix.synthetic_count;
    mix.train.assign(syn.begin(), syn.begin() + static_cast<std::ptrdiff_t>(mix.synthetic_count));
    mix.train.insert(mix.train.end(), real.begin(),
                     real.begin() + static_cast<std::ptrdiff_t>(mix.real_count));
    mixes.push_back(std::move(mix));
  }
  return mixes;
}

std::vector<Item> downsample_balance(const std::vector<Item>& items, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < items.size(); ++i) {
    (items[i].label == Outcome::kSuccess ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(Errc::kSingleClass, "class balancing needs both labels present");
  }
  auto& majority = pos.size() >= neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());

  std::mt19937_64 rng(seed);
  std::shuffle(majority.begin(), majority.end(), rng);
  majority.resize(keep);

  std::vector<bool> selected(items.size(), false);
  for (auto i : pos) selected[i] = true;
  for (auto i : neg) selected[i] = true;
  std::vector<Item> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (selected[i]) out.push_back(items[i]);
  }
  return out;
}

std::vector<Item> stratified_order(const std::vector<Item>& items, std::uint64_t seed) {
  std::vector<Item> pos;
  std::vector<Item> neg;
  for (const auto& it : items) (it.label == Outcome::kSuccess ? pos : neg).push_back(it);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  // Item r of a class of size c sits at relative position (r + 0.5) / c;
  // merging both classes by that key spreads each evenly over the output.
  std::vector<Item> out;
  out.reserve(items.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < pos.size() || j < neg.size()) {
    bool take_pos;
    if (i == pos.size()) {
      take_pos = false;
    } else if (j == neg.size()) {
      take_pos = true;
    } else {
      // (2i+1)/(2|pos|) <= (2j+1)/(2|neg|), compared exactly
      take_pos = (2 * i + 1) * neg.size() <= (2 * j + 1) * pos.size();
    }
    out.push_back(take_pos ? pos[i++] : neg[j++]);
  }
  return out;
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kInDistribution: return "in_distribution";
    case ExperimentKind::kRatio: return "ratio";
    case ExperimentKind::kGeneralization: return "generalization";
  }
  return "in_distribution";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "in_distribution") return ExperimentKind::kInDistribution;
  if (name == "ratio") return ExperimentKind::kRatio;
  if (name == "generalization") return ExperimentKind::kGeneralization;
  throw Error(Errc::kUsageError, "unknown experiment kind '" + std::string(name) + "'");
}

std::vector<SplitSpec> build_experiment(ExperimentKind kind, const AbPartition& partition,
                                        const std::vector<Item>& synthetic, std::uint64_t seed,
                                        const ExperimentOptions& options) {
  std::vector<SplitSpec> specs;
  const std::string prefix(to_string(kind));

  switch (kind) {
    case ExperimentKind::kInDistribution: {
      auto a = split_60_20_20(partition.set_a, seed);
      specs.push_back(make_spec(prefix + ".synthetic_only", synthetic, a.val, a.test, seed));
      specs.push_back(make_spec(prefix + ".real_only", a.train, a.val, a.test, seed));
      specs.push_back(
          make_spec(prefix + ".hybrid", concat(synthetic, a.train), a.val, a.test, seed));
      break;
    }
    case ExperimentKind::kRatio: {
      const std::size_t eval = options.ratio_eval_size;
      if (partition.set_a.size() < 2 * eval) {
        throw Error(Errc::kPoolTooSmall, "ratio val/test need " + std::to_string(2 * eval) +
                                             " items from A, have " +
                                             std::to_string(partition.set_a.size()));
      }
      auto ordered = stratified_order(partition.set_a, derive_seed(seed, 0));
      std::vector<Item> val(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(eval));
      std::vector<Item> test(ordered.begin() + static_cast<std::ptrdiff_t>(eval),
                             ordered.begin() + static_cast<std::ptrdiff_t>(2 * eval));
      std::vector<Item> real_pool(ordered.begin() + static_cast<std::ptrdiff_t>(2 * eval),
                                  ordered.end());
      auto mixes = build_ratio_mixes(synthetic, real_pool, options.ratio_train_size,
                                     options.ratios, derive_seed(seed, 1));
      for (auto& mix : mixes) {
        specs.push_back(make_spec(prefix + ".syn" + percent(mix.synthetic_fraction) + "_real" +
                                      percent(1.0 - mix.synthetic_fraction),
                                  std::move(mix.train), val, test, seed));
      }
      break;
    }
    case ExperimentKind::kGeneralization: {
      auto balanced = downsample_balance(partition.set_b, derive_seed(seed, 0));
      std::mt19937_64 rng(derive_seed(seed, 1));
      std::shuffle(balanced.begin(), balanced.end(), rng);
      const auto half = static_cast<std::ptrdiff_t>(balanced.size() / 2);
      std::vector<Item> val(balanced.begin(), balanced.begin() + half);
      std::vector<Item> test(balanced.begin() + half, balanced.end());
      specs.push_back(make_spec(prefix + ".synthetic_only", synthetic, val, test, seed));
      specs.push_back(make_spec(prefix + ".real_only", partition.set_a, val, test, seed));
      specs.push_back(
          make_spec(prefix + ".hybrid", concat(synthetic, partition.set_a), val, test, seed));
      break;
    }
  }
  return specs;
}

void check_split(const SplitSpec& spec) {
  std::unordered_set<std::string> seen;
  auto add_all = [&](const std::vector<Item>& part, const char* part_name) {
    std::unordered_set<std::string> local;
    for (const auto& it : part) {
      if (!local.insert(it.id).second) continue;  // repeats inside one part are not leakage
      if (!seen.insert(it.id).second) {
        throw Error(Errc::kOverlappingSplits,
                    spec.name + ": id " + it.id + " in " + part_name + " also appears earlier");
      }
    }
  };
  add_all(spec.train, "train");
  add_all(spec.val, "val");
  add_all(spec.test, "test");
  if (spec.synthetic_count + spec.real_count != spec.train.size()) {
    throw Error(Errc::kOverlappingSplits, spec.name + ": composition does not sum to train size");
  }
}

nlohmann::ordered_json split_manifest(const SplitSpec& spec) {
  auto ids = [](const std::vector<Item>& items) {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.id);
    return out;
  };
  nlohmann::ordered_json m;
  m["name"] = spec.name;
  m["train"] = ids(spec.train);
  m["val"] = ids(spec.val);
  m["test"] = ids(spec.test);
  m["composition"] = {{"synthetic", spec.synthetic_count}, {"real", spec.real_count}};
  m["seed"] = spec.seed;
  return m;
}

}  // namespace trialsynth
