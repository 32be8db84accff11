#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cauda/matrix.hpp"

namespace cauda::oracle {

enum class Verdict { Valid, Invalid, Unknown };

std::string to_string(Verdict v);
/// Inverse of to_string; ParseError(0, ...) on anything else.
Verdict verdict_from_string(std::string_view s);

extern const char* const kDefaultTemplate;

struct OracleConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  /// Name of the environment variable holding the bearer token.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string prompt_template = kDefaultTemplate;
  std::size_t max_concurrent = 4;
  /// Extra attempts after the first for network failures and unparseable
  /// answers.
  std::size_t retries = 3;
  std::chrono::milliseconds timeout{30000};
  /// First retry delay; doubles on each further attempt.
  std::chrono::milliseconds backoff{500};
  /// Empty disables caching.
  std::filesystem::path cache_path;
  /// Mask value for pairs whose verdict stays Unknown.
  bool unknown_as_valid = false;

  /// Throws ConfigError or TemplateError.
  void validate() const;
};

/// JSON object with any subset of: endpoint, model, api_key_env,
/// prompt_template, max_concurrent, retries, timeout_ms, backoff_ms,
/// cache_path, unknown_as_valid. Unknown keys are rejected.
OracleConfig parse_oracle_config(const std::string& json_text);

struct OracleVerdict {
  std::size_t verb_id = 0;
  std::size_t noun_id = 0;
  Verdict verdict = Verdict::Unknown;
  std::string raw_response;
  bool cached = false;

  bool operator==(const OracleVerdict&) const = default;
};

/// Substitutes every {verb} and {noun} slot. TemplateError when either slot
/// is missing or a name is empty.
std::string build_prompt(std::string_view verb, std::string_view noun,
                         std::string_view tmpl = kDefaultTemplate);

/// First alphabetic token, case-insensitive: "yes" is Valid, "no" is Invalid,
/// anything else Unknown.
Verdict parse_verdict(std::string_view response);

struct PairQuery {
  std::size_t verb_id = 0;
  std::size_t noun_id = 0;
  std::string verb;
  std::string noun;
  std::string prompt;
};

/// One completion per call. Implementations throw NetworkError for
/// transient failures and AuthError for credential problems; they must be
/// safe to call from several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const PairQuery& query) = 0;
};

/// Chat-completions over HTTP(S). The API key is read from the environment
/// on first use, so a complete cache never needs one.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(OracleConfig cfg);
  std::string complete(const PairQuery& query) override;

 private:
  OracleConfig cfg_;
  std::string base_;
  std::string path_;
};

/// Deterministic stand-in that answers from a function of the query and
/// records how it was called.
class MockClient : public ChatClient {
 public:
  using Responder = std::function<std::string(const PairQuery&)>;

  explicit MockClient(Responder responder, std::chrono::microseconds latency = {});

  std::string complete(const PairQuery& query) override;

  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }

 private:
  Responder responder_;
  std::chrono::microseconds latency_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

/// Rule file for MockClient, JSON:
///   {"rule": "verb<=noun" | "verb==noun" | "verb<noun" | "all" | "none",
///    "yes": "YES", "no": "NO",
///    "overrides": [{"verb": i, "noun": j, "response": "..."}],
///    "fail_after": n, "latency_us": t}
/// `fail_after` makes every call beyond the n-th throw NetworkError.
std::unique_ptr<MockClient> mock_from_rules(const std::string& json_text);

struct OracleResult {
  cooccur::ValidityMask mask;
  /// Pairs whose verdict stayed Unknown, row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> unknown;
  /// Row-major, one per pair.
  std::vector<OracleVerdict> verdicts;
  std::size_t network_calls = 0;
};

/// One verdict per (verb, noun). Cached pairs are never re-queried. Each
/// fresh verdict is appended to the cache as soon as it is known, so an
/// interrupted run keeps its progress. Throws NetworkError once retries are
/// exhausted, AuthError, and EmptyMask if no pair ends up valid.
OracleResult query_matrix(const cooccur::Vocabulary& vocab, const OracleConfig& cfg, ChatClient& client);

/// Cache replay. Later records for the same pair replace earlier ones; an
/// unterminated final line (torn write) is ignored.
std::vector<OracleVerdict> load_cache(const std::filesystem::path& path);
std::string cache_line(const OracleVerdict& v);

}  // namespace cauda::oracle
