#include "trialsynth/reasons.hpp"

#include <cctype>

#include "trialsynth/error.hpp"

namespace trialsynth {

namespace {

// Finds "<n>." at or after `from` that starts a list item: preceded by
// whitespace (or the start of the text) and followed by whitespace or the end.
std::size_t find_marker(std::string_view text, std::size_t n, std::size_t from) {
  const std::string marker = std::to_string(n) + ".";
  while (true) {
    auto p = text.find(marker, from);
    if (p == std::string_view::npos) return p;
    bool left_ok = p == 0 || std::isspace(static_cast<unsigned char>(text[p - 1])) != 0;
    std::size_t after = p + marker.size();
    bool right_ok =
        after >= text.size() || std::isspace(static_cast<unsigned char>(text[after])) != 0;
    if (left_ok && right_ok) return p;
    from = p + 1;
  }
}

}  // namespace

ReasonSet parse_reasons(std::string_view response, std::string_view intervention,
                        Outcome label) {
  std::vector<std::size_t> starts;
  std::size_t from = 0;
  for (std::size_t n = 1;; ++n) {
    auto p = find_marker(response, n, from);
    if (p == std::string_view::npos) break;
    starts.push_back(p);
    from = p + std::to_string(n).size() + 1;
  }
  if (starts.size() != kReasonCount) {
    throw Error(Errc::kMalformedReasonList,
                "expected 5 numbered reasons, found " + std::to_string(starts.size()));
  }

  ReasonSet set{std::string(intervention), label, {}};
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::size_t begin = starts[i] + std::to_string(i + 1).size() + 1;
    std::size_t end = i + 1 < starts.size() ? starts[i + 1] : response.size();
    std::string item = collapse_whitespace(response.substr(begin, end - begin));
    if (item.empty()) {
      throw Error(Errc::kMalformedReasonList, "reason " + std::to_string(i + 1) + " is empty");
    }
    set.reasons.push_back(std::move(item));
  }
  return set;
}

std::string format_reasons(const ReasonSet& reasons) {
  std::string out;
  for (std::size_t i = 0; i < reasons.reasons.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + reasons.reasons[i];
  }
  return out;
}

}  // namespace trialsynth
