#include "trialsynth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <random>

#include <nlohmann/json.hpp>

#include "trialsynth/common.hpp"
#include "trialsynth/error.hpp"

namespace trialsynth {

void EmbeddingSet::add(std::string id, std::vector<double> vector) {
  if (ids_.empty()) {
    if (vector.empty()) throw Error(Errc::kDimensionMismatch, "embedding for " + id + " is empty");
    dimension_ = vector.size();
  } else if (vector.size() != dimension_) {
    throw Error(Errc::kDimensionMismatch, "embedding for " + id + " has dimension " +
                                              std::to_string(vector.size()) + ", expected " +
                                              std::to_string(dimension_));
  }
  if (!std::all_of(vector.begin(), vector.end(), [](double x) { return std::isfinite(x); })) {
    throw Error(Errc::kNonFiniteValue, "embedding for " + id + " has a non-finite component");
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw Error(Errc::kDuplicateId, "duplicate embedding id " + id);
  }
  ids_.push_back(std::move(id));
  vectors_.push_back(std::move(vector));
}

bool EmbeddingSet::contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

EmbeddingSet parse_embeddings(std::istream& in) {
  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError, "embeddings line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("id") || !row.contains("vector") ||
        !row["id"].is_string() || !row["vector"].is_array()) {
      throw Error(Errc::kParseError,
                  "embeddings line " + std::to_string(line_no) + ": expected {id, vector}");
    }
    std::vector<double> vec;
    vec.reserve(row["vector"].size());
    for (const auto& x : row["vector"]) {
      // JSON has no NaN/Infinity; encoders that meet one write null.
      if (x.is_null()) {
        vec.push_back(std::nan(""));
      } else if (x.is_number()) {
        vec.push_back(x.get<double>());
      } else {
        throw Error(Errc::kParseError,
                    "embeddings line " + std::to_string(line_no) + ": non-numeric component");
      }
    }
    set.add(row["id"].get<std::string>(), std::move(vec));
  }
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::kIoError, "cannot open " + file.string());
  return parse_embeddings(in);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(Errc::kDimensionMismatch, "cosine of vectors with different dimensions");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(Errc::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::string_view to_string(PairMode mode) {
  switch (mode) {
    case PairMode::kRealReal: return "real_real";
    case PairMode::kSynSyn: return "syn_syn";
    case PairMode::kRealSyn: return "real_syn";
  }
  return "real_real";
}

SimilaritySample sample_pairs_within(const EmbeddingSet& set, PairMode mode, std::size_t n,
                                     std::uint64_t seed) {
  if (set.size() < 2) {
    throw Error(Errc::kTooFewItems, "pair sampling within a set needs at least 2 items");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  SimilaritySample sample;
  sample.mode = mode;
  sample.pairs.reserve(n);
  sample.similarities.reserve(n);
  while (sample.pairs.size() < n) {
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) continue;
    sample.pairs.emplace_back(set.id(i), set.id(j));
    sample.similarities.push_back(cosine(set.vector(i), set.vector(j)));
  }
  return sample;
}

SimilaritySample sample_pairs_across(const EmbeddingSet& a, const EmbeddingSet& b,
                                     PairMode mode, std::size_t n, std::uint64_t seed) {
  if (a.size() == 0 || b.size() == 0) {
    throw Error(Errc::kTooFewItems, "pair sampling across sets needs both sets non-empty");
  }
  if (a.dimension() != b.dimension()) {
    throw Error(Errc::kDimensionMismatch, "embedding sets have different dimensions");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
  SimilaritySample sample;
  sample.mode = mode;
  sample.pairs.reserve(n);
  sample.similarities.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i = pick_a(rng);
    std::size_t j = pick_b(rng);
    sample.pairs.emplace_back(a.id(i), b.id(j));
    sample.similarities.push_back(cosine(a.vector(i), b.vector(j)));
  }
  return sample;
}

double Histogram::bin_left(std::size_t i) const {
  return low + (high - low) * static_cast<double>(i) / static_cast<double>(counts.size());
}

double Histogram::bin_right(std::size_t i) const { return bin_left(i + 1); }

std::size_t Histogram::total() const {
  std::size_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins, double low,
                    double high) {
  if (bins == 0 || !(high > low)) {
    throw Error(Errc::kOutOfRange, "histogram needs bins > 0 and high > low");
  }
  Histogram h;
  h.low = low;
  h.high = high;
  h.counts.assign(bins, 0);
  for (double x : values) {
    double pos = (x - low) * static_cast<double>(bins) / (high - low);
    std::size_t bin = 0;
    if (pos >= static_cast<double>(bins)) {
      bin = bins - 1;
    } else if (pos > 0.0) {
      bin = static_cast<std::size_t>(pos);
    }
    ++h.counts[bin];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,count\n";
  char buf[96];
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu\n", h.bin_left(i), h.bin_right(i), h.counts[i]);
    out += buf;
  }
  return out;
}

std::string pairs_csv(const SimilaritySample& sample, bool with_header) {
  std::string out = with_header ? "mode,id_a,id_b,similarity\n" : "";
  char buf[40];
  const std::string mode(to_string(sample.mode));
  for (std::size_t k = 0; k < sample.pairs.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", sample.similarities[k]);
    out += mode + ',' + sample.pairs[k].first + ',' + sample.pairs[k].second + ',' + buf + '\n';
  }
  return out;
}

}  // namespace trialsynth
