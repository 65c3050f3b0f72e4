#include "trialsynth/templates.hpp"

#include <cctype>

#include "trialsynth/error.hpp"

namespace trialsynth {

std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() &&
           (std::islower(static_cast<unsigned char>(tmpl[j])) != 0 || tmpl[j] == '_')) {
      ++j;
    }
    if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') {
      out.push_back(tmpl[i++]);
      continue;
    }
    std::string key(tmpl.substr(i + 1, j - i - 1));
    auto it = values.find(key);
    if (it == values.end()) {
      throw Error(Errc::kUnresolvedPlaceholder, "no value for placeholder {" + key + "}");
    }
    out += it->second;
    i = j + 1;
  }
  return out;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string example_segment_text(Outcome label, std::string_view trial_text) {
  std::string_view body = trial_text;
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) {
    body.remove_suffix(1);
  }
  return fill_template(templates::kExample,
                       {{"outcome_word", label == Outcome::kSuccess ? "Successful" : "Failed"},
                        {"example", std::string(body)}});
}

}  // namespace trialsynth
