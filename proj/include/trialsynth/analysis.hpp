#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace trialsynth {

class EmbeddingSet {
 public:
  /// Throws Errc::kDimensionMismatch, Errc::kNonFiniteValue, Errc::kDuplicateId.
  void add(std::string id, std::vector<double> vector);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const double> vector(std::size_t i) const { return vectors_[i]; }
  bool contains(std::string_view id) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// JSON-lines {"id": ..., "vector": [...]}; dimension taken from the first row.
EmbeddingSet parse_embeddings(std::istream& in);
EmbeddingSet load_embeddings(const std::filesystem::path& file);

/// Cosine similarity clamped to [-1, 1]. Throws Errc::kZeroVector,
/// Errc::kDimensionMismatch.
double cosine(std::span<const double> u, std::span<const double> v);

enum class PairMode { kRealReal, kSynSyn, kRealSyn };

std::string_view to_string(PairMode mode);

struct SimilaritySample {
  PairMode mode = PairMode::kRealReal;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<double> similarities;
};

inline constexpr std::size_t kDefaultPairCount = 10'000;

/// Ordered pairs drawn uniformly with replacement from one set, redrawing
/// self-pairs. Throws Errc::kTooFewItems when the set has fewer than 2 items.
SimilaritySample sample_pairs_within(const EmbeddingSet& set, PairMode mode, std::size_t n,
                                     std::uint64_t seed);

/// First element from `a`, second from `b`. Throws Errc::kTooFewItems if
/// either set is empty, Errc::kDimensionMismatch if dimensions differ.
SimilaritySample sample_pairs_across(const EmbeddingSet& a, const EmbeddingSet& b,
                                     PairMode mode, std::size_t n, std::uint64_t seed);

struct Histogram {
  double low = -1.0;
  double high = 1.0;
  std::vector<std::size_t> counts;

  double bin_left(std::size_t i) const;
  double bin_right(std::size_t i) const;
  std::size_t total() const;
};

inline constexpr std::size_t kDefaultBins = 80;

/// Equal-width bins over [low, high); the last bin is closed on the right.
/// Values outside the range land in the nearest end bin.
Histogram histogram(const std::vector<double>& values, std::size_t bins = kDefaultBins,
                    double low = -1.0, double high = 1.0);

/// "bin_left,bin_right,count"
std::string histogram_csv(const Histogram& h);
/// "mode,id_a,id_b,similarity"; `with_header` writes the header line first.
std::string pairs_csv(const SimilaritySample& sample, bool with_header = true);

}  // namespace trialsynth
