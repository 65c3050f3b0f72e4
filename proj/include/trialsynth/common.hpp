#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace trialsynth {

/// Binary trial outcome. Numeric values match the label files (0 failure, 1 success).
enum class Outcome : std::uint8_t { kFailure = 0, kSuccess = 1 };

inline int to_int(Outcome o) { return static_cast<int>(o); }

/// Throws Errc::kBadLabelValue unless value is 0 or 1.
Outcome outcome_from_int(long long value);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Replaces every run of whitespace (including newlines) with one space and trims.
std::string collapse_whitespace(std::string_view s);

/// Lowercase, trim, collapse internal whitespace. Shared key for drug and
/// intervention names across real and synthetic trials.
std::string canonicalize_name(std::string_view name);

bool icontains(std::string_view haystack, std::string_view needle);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// SplitMix64 finalizer over (base, stream); derives independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace trialsynth
