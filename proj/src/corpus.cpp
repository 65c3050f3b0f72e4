#include "trialsynth/corpus.hpp"

#include <expat.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trialsynth/error.hpp"

namespace trialsynth {

namespace {

// ---------------------------------------------------------------------------
// XML

struct OpenElement {
  std::string name;
  std::string text;
  bool has_children = false;
};

struct ParseState {
  std::vector<OpenElement> stack;
  TrialRecord record;
  bool seen_id = false;
};

std::string current_path(const std::vector<OpenElement>& stack) {
  if (stack.size() == 1) return stack.front().name;
  std::string path;
  for (std::size_t i = 1; i < stack.size(); ++i) {
    if (!path.empty()) path.push_back('/');
    path += stack[i].name;
  }
  return path;
}

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** /*attrs*/) {
  auto& state = *static_cast<ParseState*>(user);
  if (!state.stack.empty()) state.stack.back().has_children = true;
  state.stack.push_back(OpenElement{name, {}, false});
}

void XMLCALL on_text(void* user, const XML_Char* s, int len) {
  auto& state = *static_cast<ParseState*>(user);
  if (!state.stack.empty()) state.stack.back().text.append(s, static_cast<std::size_t>(len));
}

void XMLCALL on_end(void* user, const XML_Char* /*name*/) {
  auto& state = *static_cast<ParseState*>(user);
  const OpenElement& el = state.stack.back();
  std::string text = collapse_whitespace(el.text);

  if (el.name == "nct_id" && !state.seen_id && !text.empty()) {
    state.record.trial_id = text;
    state.seen_id = true;
  } else if (el.name == "intervention_name" && !text.empty()) {
    std::string canon = canonicalize_name(text);
    auto& names = state.record.intervention_names;
    if (std::find(names.begin(), names.end(), canon) == names.end()) names.push_back(canon);
  } else if (el.name == "overall_status" && !state.record.overall_status) {
    state.record.overall_status = text;
  } else if (el.name == "why_stop" && !state.record.why_stop) {
    state.record.why_stop = text;
  }

  if (!el.has_children && !text.empty()) {
    state.record.fields.push_back(Field{current_path(state.stack), std::move(text)});
  }
  state.stack.pop_back();
}

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

// ---------------------------------------------------------------------------
// Scrubbing

constexpr std::array<std::string_view, 2> kLeakFields = {"overall_status", "why_stop"};
constexpr std::array<std::string_view, 4> kLabelWords = {"successful", "success", "failed",
                                                         "failure"};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_hspace(char c) { return c == ' ' || c == '\t'; }

bool is_leak_line(std::string_view line) {
  line = trim(line);
  auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  std::string_view key = line.substr(0, colon);
  if (std::any_of(key.begin(), key.end(),
                  [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; })) {
    return false;
  }
  auto slash = key.rfind('/');
  if (slash != std::string_view::npos) key = key.substr(slash + 1);
  return std::find(kLeakFields.begin(), kLeakFields.end(), key) != kLeakFields.end();
}

std::string drop_leak_lines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    std::string_view line = text.substr(pos, end - pos);
    if (!is_leak_line(line)) out.append(line);
    pos = end;
  }
  return out;
}

// Position of the next "<tag" that really opens `tag` (followed by '>', '/'
// or whitespace), starting at `from`.
std::size_t find_open_tag(std::string_view text, std::string_view tag, std::size_t from) {
  std::string needle = "<" + std::string(tag);
  while (true) {
    auto p = text.find(needle, from);
    if (p == std::string_view::npos) return p;
    std::size_t after = p + needle.size();
    if (after >= text.size()) return p;
    char c = text[after];
    if (c == '>' || c == '/' || std::isspace(static_cast<unsigned char>(c))) return p;
    from = p + 1;
  }
}

void drop_elements_once(std::string& text, std::string_view tag) {
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t from = 0;
  while (true) {
    auto open = find_open_tag(text, tag, from);
    if (open == std::string::npos) return;
    auto open_end = text.find('>', open);
    if (open_end == std::string::npos) {
      text.erase(open);
      return;
    }
    bool self_closing = text[open_end - 1] == '/';
    std::size_t erase_end = open_end + 1;
    if (!self_closing) {
      auto c = text.find(close, open_end);
      if (c != std::string::npos) erase_end = c + close.size();
    }
    text.erase(open, erase_end - open);
    from = open;
  }
}

// Repeats until nothing changes: erasing one element can splice the text
// around it into a new opening tag.
std::string drop_leak_elements(std::string_view input) {
  std::string text(input);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view tag : kLeakFields) {
      const std::size_t before = text.size();
      drop_elements_once(text, tag);
      changed = changed || text.size() != before;
    }
  }
  return text;
}

bool is_label_word(std::string_view word) {
  std::string lower = to_lower(word);
  return std::find(kLabelWords.begin(), kLabelWords.end(), lower) != kLabelWords.end();
}

bool closes_phrase(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ')';
}

// Drops whole label words together with the single space they leave
// dangling, so "was successful overall" becomes "was overall" and
// "trial failed</r>" becomes "trial</r>".
std::string drop_label_words(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    if (!is_label_word(word)) {
      out.append(word);
      i = j;
      continue;
    }
    const bool at_line_start = out.empty() || out.back() == '\n';
    const char next = j < text.size() ? text[j] : '\n';
    if (at_line_start) {
      if (is_hspace(next)) ++j;
    } else if (is_hspace(out.back()) && (is_hspace(next) || next == '\n' || next == '\r' ||
                                         closes_phrase(next) || next == '<')) {
      out.pop_back();
    }
    i = j;
  }
  return out;
}

}  // namespace

TrialRecord parse_trial_xml(std::string_view xml_text) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate(nullptr));
  if (!parser) throw Error(Errc::kMalformedXml, "cannot allocate XML parser");

  ParseState state;
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);

  if (xml_text.size() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw Error(Errc::kMalformedXml, "document too large");
  }
  if (XML_Parse(parser.get(), xml_text.data(), static_cast<int>(xml_text.size()), 1) ==
      XML_STATUS_ERROR) {
    std::ostringstream msg;
    msg << "line " << XML_GetCurrentLineNumber(parser.get()) << ": "
        << XML_ErrorString(XML_GetErrorCode(parser.get()));
    throw Error(Errc::kMalformedXml, msg.str());
  }
  if (!state.seen_id) throw Error(Errc::kMissingTrialId, "record has no <nct_id> element");

  state.record.raw_xml = std::string(xml_text);
  return std::move(state.record);
}

std::vector<TrialRecord> load_xml_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::kIoError, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<TrialRecord> records;
  records.reserve(files.size());
  for (const auto& file : files) {
    try {
      records.push_back(parse_trial_xml(read_file(file)));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
  }
  return records;
}

std::string serialize_trial(const TrialRecord& record) {
  std::string out;
  for (const auto& field : record.fields) {
    out += field.path;
    out += ": ";
    out += collapse_whitespace(field.text);
    out += '\n';
  }
  return out;
}

std::string scrub_leakage(std::string_view text, ScrubMode mode) {
  if (mode == ScrubMode::kReal) return drop_leak_lines(text);
  return drop_leak_lines(drop_label_words(drop_leak_elements(text)));
}

LabelMap parse_labels(std::istream& in) {
  LabelMap labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    if (line_no == 1 && row == "trial_id,label") continue;

    auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw Error(Errc::kParseError,
                  "labels line " + std::to_string(line_no) + ": expected two columns");
    }
    std::string id(trim(row.substr(0, comma)));
    std::string_view value = trim(row.substr(comma + 1));
    long long parsed = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (id.empty()) {
      throw Error(Errc::kParseError, "labels line " + std::to_string(line_no) + ": empty id");
    }
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw Error(Errc::kBadLabelValue, "labels line " + std::to_string(line_no) +
                                            ": label '" + std::string(value) + "' is not 0 or 1");
    }
    Outcome label = outcome_from_int(parsed);
    if (!labels.emplace(id, label).second) {
      throw Error(Errc::kDuplicateTrialId, "labels: duplicate trial id " + id);
    }
  }
  return labels;
}

LabelMap load_labels(const std::filesystem::path& label_file) {
  std::ifstream in(label_file);
  if (!in) throw Error(Errc::kIoError, "cannot open " + label_file.string());
  return parse_labels(in);
}

LabeledCorpus::LabeledCorpus(std::vector<LabeledTrial> trials) : trials_(std::move(trials)) {
  id_index_.reserve(trials_.size());
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    if (!id_index_.emplace(trials_[i].id(), i).second) {
      throw Error(Errc::kDuplicateTrialId, "duplicate trial id " + trials_[i].id());
    }
  }
}

const LabeledTrial* LabeledCorpus::find(std::string_view trial_id) const {
  auto it = id_index_.find(std::string(trial_id));
  return it == id_index_.end() ? nullptr : &trials_[it->second];
}

LabeledCorpus build_labeled_corpus(const std::vector<TrialRecord>& records,
                                   const LabelMap& labels) {
  std::vector<LabeledTrial> trials;
  for (const auto& record : records) {
    auto it = labels.find(record.trial_id);
    if (it == labels.end()) continue;
    LabeledTrial trial;
    trial.record = record;
    trial.text = scrub_leakage(serialize_trial(record), ScrubMode::kReal);
    trial.label = it->second;
    trials.push_back(std::move(trial));
  }
  if (trials.empty()) throw Error(Errc::kEmptyCorpus, "no record has a label");
  return LabeledCorpus(std::move(trials));
}

std::string corpus_to_jsonl(const LabeledCorpus& corpus) {
  std::string out;
  for (const auto& trial : corpus.trials()) {
    nlohmann::ordered_json row;
    row["trial_id"] = trial.id();
    row["text"] = trial.text;
    row["label"] = to_int(trial.label);
    row["interventions"] = trial.record.intervention_names;
    out += row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const LabeledCorpus& corpus, const std::filesystem::path& path) {
  write_file(path, corpus_to_jsonl(corpus));
}

LabeledCorpus corpus_from_jsonl(std::istream& in) {
  std::vector<LabeledTrial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto row = nlohmann::json::parse(line);
      LabeledTrial trial;
      trial.record.trial_id = row.at("trial_id").get<std::string>();
      for (const auto& name : row.at("interventions")) {
        trial.record.intervention_names.push_back(canonicalize_name(name.get<std::string>()));
      }
      trial.text = row.at("text").get<std::string>();
      trial.label = outcome_from_int(row.at("label").get<long long>());
      trials.push_back(std::move(trial));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return LabeledCorpus(std::move(trials));
}

LabeledCorpus read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  return corpus_from_jsonl(in);
}

}  // namespace trialsynth
