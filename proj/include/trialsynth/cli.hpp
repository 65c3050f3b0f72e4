#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trialsynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable holding the API key for the HTTP transport.
inline constexpr const char* kApiKeyEnv = "OPENAI_API_KEY";

/// Entry point behind the `trialsynth` binary. `args` excludes the program
/// name. Domain errors are written to `err` as one JSON object
/// {"error", "module", "message"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trialsynth::cli
