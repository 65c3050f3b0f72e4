#include "trialsynth/llm.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "trialsynth/corpus.hpp"
#include "trialsynth/error.hpp"

namespace trialsynth {

// ---------------------------------------------------------------------------
// HTTP

std::string chat_request_body(const CompletionRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model_name;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  if (request.max_output_tokens > 0) body["max_tokens"] = request.max_output_tokens;
  return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

HttpTransport::HttpTransport(HttpOptions options) : options_(std::move(options)) {
  // Split "scheme://host[:port][/prefix]" into origin and path prefix.
  const std::string& url = options_.base_url;
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  origin_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  endpoint_ = prefix + "/chat/completions";
}

TransportReply HttpTransport::send(const CompletionRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);

  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  auto res = client.Post(endpoint_, headers, chat_request_body(request), "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  if (res->status != 200) return {res->status, res->body};

  try {
    auto body = nlohmann::json::parse(res->body);
    const auto& message = body.at("choices").at(0).at("message");
    if (message.at("content").is_null()) return {200, ""};
    return {200, message.at("content").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kTransportError, std::string("unexpected completion payload: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Mocks

std::vector<CompletionRequest> RecordingTransport::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t RecordingTransport::request_count() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

void RecordingTransport::record(const CompletionRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
}

ScriptedTransport::ScriptedTransport(std::vector<TransportReply> script)
    : script_(std::move(script)) {}

std::shared_ptr<ScriptedTransport> ScriptedTransport::of(
    const std::vector<std::string>& responses) {
  std::vector<TransportReply> script;
  for (const auto& r : responses) script.push_back({200, r});
  return std::make_shared<ScriptedTransport>(std::move(script));
}

TransportReply ScriptedTransport::send(const CompletionRequest& request) {
  record(request);
  std::lock_guard lock(mutex_);
  if (next_ >= script_.size()) {
    throw Error(Errc::kTransportError, "scripted mock exhausted after " +
                                           std::to_string(script_.size()) + " replies");
  }
  return script_[next_++];
}

HashedTransport::HashedTransport(std::map<std::string, std::string> by_prompt_sha256)
    : responses_(std::move(by_prompt_sha256)) {}

TransportReply HashedTransport::send(const CompletionRequest& request) {
  record(request);
  auto hash = sha256_hex(request.prompt);
  auto it = responses_.find(hash);
  if (it == responses_.end()) {
    throw Error(Errc::kTransportError, "no mock response for prompt sha256 " + hash);
  }
  return {200, it->second};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::shared_ptr<RecordingTransport> load_mock_transport(const std::filesystem::path& fixture) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(fixture));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, fixture.string() + ": " + e.what());
  }
  try {
    if (doc.is_array()) {
      std::vector<TransportReply> script;
      for (const auto& entry : doc) {
        if (entry.is_string()) {
          script.push_back({200, entry.get<std::string>()});
        } else {
          script.push_back({entry.at("status").get<int>(), entry.value("content", "")});
        }
      }
      return std::make_shared<ScriptedTransport>(std::move(script));
    }
    if (doc.is_object()) {
      return std::make_shared<HashedTransport>(doc.get<std::map<std::string, std::string>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParseError, fixture.string() + ": " + e.what());
  }
  throw Error(Errc::kParseError, fixture.string() + ": expected a JSON array or object");
}

// ---------------------------------------------------------------------------
// Client

bool is_transient_status(int status) { return status == 0 || status == 429 || status >= 500; }

LlmClient::LlmClient(std::shared_ptr<Transport> transport, ClientOptions options)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(
          static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight)))),
      jitter_state_(std::random_device{}()) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (!options_.count_tokens) options_.count_tokens = estimate_tokens;
  if (options_.retry.max_attempts == 0) options_.retry.max_attempts = 1;
}

std::chrono::milliseconds LlmClient::backoff_delay(std::size_t retry) const {
  const auto& policy = options_.retry;
  auto delay = policy.base_delay;
  for (std::size_t i = 0; i < retry && delay < policy.max_delay; ++i) delay *= 2;
  return std::min(delay, policy.max_delay);
}

std::string LlmClient::complete(const CompletionRequest& request) const {
  if (request.temperature < 0) {
    throw Error(Errc::kTransportError, "temperature must be non-negative");
  }
  const std::size_t tokens = options_.count_tokens(request.prompt);
  if (tokens > options_.token_budget) {
    throw Error(Errc::kBudgetExceeded, "prompt needs ~" + std::to_string(tokens) +
                                           " tokens, budget is " +
                                           std::to_string(options_.token_budget));
  }

  const auto& policy = options_.retry;
  TransportReply reply;
  for (std::size_t attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0) {
      double factor = 1.0;
      {
        std::lock_guard lock(jitter_mutex_);
        std::mt19937_64 rng(jitter_state_++);
        factor = 1.0 - policy.jitter * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      }
      auto delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff_delay(attempt - 1).count()) * factor));
      spdlog::warn("completion attempt {} failed with status {}; retrying in {} ms", attempt,
                   reply.status, delay.count());
      options_.sleep(delay);
    }

    in_flight_->acquire();
    try {
      reply = transport_->send(request);
    } catch (...) {
      in_flight_->release();
      throw;
    }
    in_flight_->release();

    if (reply.status == 200) {
      if (trim(reply.content).empty()) {
        throw Error(Errc::kEmptyResponse, "model returned an empty message");
      }
      return reply.content;
    }
    if (!is_transient_status(reply.status)) break;
  }
  throw Error(Errc::kTransportError,
              "completion failed with status " + std::to_string(reply.status) + ": " +
                  reply.content.substr(0, 200));
}

// ---------------------------------------------------------------------------
// Validation

std::string synthetic_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "SYN-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::string SyntheticIdCounter::next() { return synthetic_id(next_.fetch_add(1)); }

bool has_tag_pair(std::string_view text) {
  auto is_name_start = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
  };
  auto is_name_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-' ||
           c == '.' || c == ':';
  };
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string_view::npos) {
    std::size_t name_begin = pos + 1;
    if (name_begin >= text.size() || !is_name_start(text[name_begin])) {
      ++pos;
      continue;
    }
    std::size_t name_end = name_begin;
    while (name_end < text.size() && is_name_char(text[name_end])) ++name_end;
    auto close_angle = text.find('>', name_end);
    if (close_angle == std::string_view::npos) return false;
    char after = text[name_end];
    bool plain_open = (after == '>' || std::isspace(static_cast<unsigned char>(after)) != 0) &&
                      text[close_angle - 1] != '/';
    if (plain_open) {
      std::string close = "</" + std::string(text.substr(name_begin, name_end - name_begin));
      auto c = text.find(close, close_angle);
      while (c != std::string_view::npos) {
        std::size_t k = c + close.size();
        while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
        if (k < text.size() && text[k] == '>') return true;
        c = text.find(close, c + 1);
      }
    }
    pos = name_end;
  }
  return false;
}

namespace {

void check_report_text(std::string_view text, std::string_view intervention) {
  if (trim(text).empty()) throw Error(Errc::kEmptyResponse, "generated report is empty");
  if (!icontains(text, intervention)) {
    throw Error(Errc::kMissingIntervention,
                "generated report never mentions '" + std::string(intervention) + "'");
  }
  if (!has_tag_pair(text)) {
    throw Error(Errc::kNotReportShaped, "generated report has no XML-like tag pair");
  }
}

}  // namespace

SyntheticTrial validate_report(std::string_view response, std::string_view intervention,
                               Outcome label, Provenance provenance) {
  if (trim(response).empty()) throw Error(Errc::kEmptyResponse, "model returned nothing");
  SyntheticTrial trial;
  trial.text = scrub_leakage(response, ScrubMode::kSynthetic);
  trial.intervention = canonicalize_name(intervention);
  trial.label = label;
  trial.provenance = std::move(provenance);
  check_report_text(trial.text, trial.intervention);
  return trial;
}

SyntheticTrial validate_synthetic(std::string_view response, std::string_view intervention,
                                  Outcome label, Provenance provenance,
                                  SyntheticIdCounter& ids) {
  SyntheticTrial trial = validate_report(response, intervention, label, std::move(provenance));
  trial.trial_id = ids.next();
  return trial;
}

void check_synthetic(const SyntheticTrial& trial) {
  check_report_text(trial.text, trial.intervention);
  if (scrub_leakage(trial.text, ScrubMode::kSynthetic) != trial.text) {
    throw Error(Errc::kNotReportShaped, trial.trial_id + " still contains label-leaking text");
  }
}

}  // namespace trialsynth
