#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "trialsynth/common.hpp"
#include "trialsynth/reasons.hpp"
#include "trialsynth/templates.hpp"

namespace trialsynth {

struct CompletionRequest {
  std::string prompt;
  double temperature = 1.0;
  std::string model_name = "gpt-4o-mini";
  std::size_t max_output_tokens = 0;  // 0 leaves the server default
};

/// Raw outcome of one transport call. `status` is the HTTP status; 0 means the
/// request never completed (connection failure, timeout).
struct TransportReply {
  int status = 200;
  std::string content;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply send(const CompletionRequest& request) = 0;
};

struct HttpOptions {
  /// Prefix of the OpenAI-compatible API; "/chat/completions" is appended.
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{120};
};

/// POSTs {model, messages:[{role:"user", content}], temperature} and returns
/// choices[0].message.content.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpOptions options);
  TransportReply send(const CompletionRequest& request) override;

 private:
  HttpOptions options_;
  std::string origin_;
  std::string endpoint_;
};

/// Request JSON sent by HttpTransport, exposed for inspection.
std::string chat_request_body(const CompletionRequest& request);

/// Base class for in-process transports; records every request it receives.
class RecordingTransport : public Transport {
 public:
  std::vector<CompletionRequest> requests() const;
  std::size_t request_count() const;

 protected:
  void record(const CompletionRequest& request);

 private:
  mutable std::mutex mutex_;
  std::vector<CompletionRequest> requests_;
};

/// Replies from a fixed queue in request order. Exhausting the queue is a
/// non-retryable TransportError.
class ScriptedTransport : public RecordingTransport {
 public:
  explicit ScriptedTransport(std::vector<TransportReply> script);
  /// Convenience: every entry is a 200 reply.
  static std::shared_ptr<ScriptedTransport> of(const std::vector<std::string>& responses);

  TransportReply send(const CompletionRequest& request) override;

 private:
  std::mutex mutex_;
  std::vector<TransportReply> script_;
  std::size_t next_ = 0;
};

/// Replies by SHA-256 of the prompt. Unknown prompts are a non-retryable TransportError.
class HashedTransport : public RecordingTransport {
 public:
  explicit HashedTransport(std::map<std::string, std::string> by_prompt_sha256);
  TransportReply send(const CompletionRequest& request) override;

 private:
  std::map<std::string, std::string> responses_;
};

std::string sha256_hex(std::string_view data);

/// Mock fixture file: a JSON array (scripted; entries are strings or
/// {"status": int, "content": string}) or a JSON object {prompt_sha256: response}.
std::shared_ptr<RecordingTransport> load_mock_transport(const std::filesystem::path& fixture);

struct RetryPolicy {
  std::size_t max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30'000};
  double jitter = 0.5;  // each delay is scaled by a uniform factor in [1 - jitter, 1]
};

struct ClientOptions {
  std::size_t token_budget = kDefaultTokenBudget;
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  TokenCounter count_tokens = estimate_tokens;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

bool is_transient_status(int status);

/// Thread-safe completion client. At most `max_in_flight` requests are
/// outstanding at once.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<Transport> transport, ClientOptions options = {});

  /// Throws Errc::kBudgetExceeded before any transport call when the prompt
  /// estimate is over budget; Errc::kTransportError once retries are spent or
  /// on a non-retryable status; Errc::kEmptyResponse for a blank reply.
  std::string complete(const CompletionRequest& request) const;

  /// Delay before retry number `retry` (0-based), before jitter.
  std::chrono::milliseconds backoff_delay(std::size_t retry) const;

 private:
  std::shared_ptr<Transport> transport_;
  ClientOptions options_;
  mutable std::unique_ptr<std::counting_semaphore<>> in_flight_;
  mutable std::mutex jitter_mutex_;
  mutable std::uint64_t jitter_state_;
};

struct Provenance {
  std::vector<std::string> example_ids;
  std::vector<std::string> reasons;
  std::string model_name;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::string timestamp;

  bool operator==(const Provenance&) const = default;
};

struct SyntheticTrial {
  std::string trial_id;
  std::string text;
  std::string intervention;
  Outcome label = Outcome::kFailure;
  Provenance provenance;

  bool operator==(const SyntheticTrial&) const = default;
};

/// Hands out "SYN-000001", "SYN-000002", ...
class SyntheticIdCounter {
 public:
  std::string next();

 private:
  std::atomic<std::uint64_t> next_{1};
};

std::string synthetic_id(std::uint64_t n);

/// True when the text holds at least one <tag ...>...</tag> pair.
bool has_tag_pair(std::string_view text);

/// Scrubs (synthetic mode) and checks a generated report; the returned trial
/// has no id yet. Throws Errc::kEmptyResponse, Errc::kMissingIntervention,
/// Errc::kNotReportShaped.
SyntheticTrial validate_report(std::string_view response, std::string_view intervention,
                               Outcome label, Provenance provenance);

/// validate_report plus a fresh id from `ids`.
SyntheticTrial validate_synthetic(std::string_view response, std::string_view intervention,
                                  Outcome label, Provenance provenance, SyntheticIdCounter& ids);

/// Re-checks a stored trial: scrubbed text, intervention present, report shaped.
/// Throws the same errors as validate_report.
void check_synthetic(const SyntheticTrial& trial);

}  // namespace trialsynth
