#include "cauda/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "cauda/error.hpp"
#include "httplib.h"
#include "io_util.hpp"
#include "json.hpp"

namespace cauda::oracle {

using nlohmann::json;

const char* const kDefaultTemplate =
    "Answer with exactly one word, YES or NO. In the context of daily cooking "
    "activities, does the action \"{verb} {noun}\" make sense?";

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Valid: return "valid";
    case Verdict::Invalid: return "invalid";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "valid") return Verdict::Valid;
  if (s == "invalid") return Verdict::Invalid;
  if (s == "unknown") return Verdict::Unknown;
  throw ParseError(0, "unknown verdict '" + std::string(s) + "'");
}

void OracleConfig::validate() const {
  if (max_concurrent == 0) throw ConfigError("max_concurrent must be >= 1");
  if (endpoint.empty()) throw ConfigError("endpoint is empty");
  if (model.empty()) throw ConfigError("model is empty");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (backoff.count() < 0) throw ConfigError("backoff must be non-negative");
  if (prompt_template.find("{verb}") == std::string::npos)
    throw TemplateError("prompt template lacks the {verb} slot");
  if (prompt_template.find("{noun}") == std::string::npos)
    throw TemplateError("prompt template lacks the {noun} slot");
}

OracleConfig parse_oracle_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("oracle config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("oracle config must be a JSON object");
  OracleConfig c;
  try {
    for (auto& [key, v] : j.items()) {
      if (key == "endpoint") c.endpoint = v.get<std::string>();
      else if (key == "model") c.model = v.get<std::string>();
      else if (key == "api_key_env") c.api_key_env = v.get<std::string>();
      else if (key == "prompt_template") c.prompt_template = v.get<std::string>();
      else if (key == "max_concurrent") c.max_concurrent = v.get<std::size_t>();
      else if (key == "retries") c.retries = v.get<std::size_t>();
      else if (key == "timeout_ms") c.timeout = std::chrono::milliseconds(v.get<std::int64_t>());
      else if (key == "backoff_ms") c.backoff = std::chrono::milliseconds(v.get<std::int64_t>());
      else if (key == "cache_path") c.cache_path = v.get<std::string>();
      else if (key == "unknown_as_valid") c.unknown_as_valid = v.get<bool>();
      else throw ConfigError("oracle config: unknown key '" + key + "'");
    }
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("oracle config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string build_prompt(std::string_view verb, std::string_view noun, std::string_view tmpl) {
  if (verb.empty() || noun.empty()) throw TemplateError("verb and noun names must be non-empty");
  if (tmpl.find("{verb}") == std::string_view::npos)
    throw TemplateError("prompt template lacks the {verb} slot");
  if (tmpl.find("{noun}") == std::string_view::npos)
    throw TemplateError("prompt template lacks the {noun} slot");
  std::string out;
  out.reserve(tmpl.size() + verb.size() + noun.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 6, "{verb}") == 0) {
      out += verb;
      i += 6;
    } else if (tmpl.compare(i, 6, "{noun}") == 0) {
      out += noun;
      i += 6;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

Verdict parse_verdict(std::string_view response) {
  std::size_t i = 0;
  auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  while (i < response.size() && !alpha(response[i])) ++i;
  std::string token;
  while (i < response.size() && alpha(response[i]))
    token += static_cast<char>(std::tolower(static_cast<unsigned char>(response[i++])));
  if (token == "yes") return Verdict::Valid;
  if (token == "no") return Verdict::Invalid;
  return Verdict::Unknown;
}

// ---------------------------------------------------------------------------
// HTTP client

HttpChatClient::HttpChatClient(OracleConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint '" + cfg_.endpoint + "' lacks a scheme");
  const std::string scheme = cfg_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("endpoint scheme must be http or https");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("this build has no TLS support; use an http endpoint");
#endif
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  base_ = cfg_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
}

std::string HttpChatClient::complete(const PairQuery& query) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw AuthError("environment variable " + cfg_.api_key_env + " is not set");

  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  json body = {{"model", cfg_.model},
               {"messages", json::array({{{"role", "user"}, {"content", query.prompt}}})}};
  httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw NetworkError("request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
  if (res->status != 200) throw NetworkError("endpoint returned HTTP " + std::to_string(res->status));

  try {
    json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw NetworkError(std::string("malformed completion response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Mock client

MockClient::MockClient(Responder responder, std::chrono::microseconds latency)
    : responder_(std::move(responder)), latency_(latency) {}

std::string MockClient::complete(const PairQuery& query) {
  calls_.fetch_add(1);
  const std::size_t now = in_flight_.fetch_add(1) + 1;
  std::size_t seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { n.fetch_sub(1); }
  } leave{in_flight_};
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return responder_(query);
}

std::unique_ptr<MockClient> mock_from_rules(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("mock rules: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("mock rules must be a JSON object");

  std::string rule = "none", yes = "YES", no = "NO";
  std::map<std::pair<std::size_t, std::size_t>, std::string> overrides;
  std::optional<std::size_t> fail_after;
  std::int64_t latency_us = 0;
  try {
    for (auto& [key, v] : j.items()) {
      if (key == "rule") rule = v.get<std::string>();
      else if (key == "yes") yes = v.get<std::string>();
      else if (key == "no") no = v.get<std::string>();
      else if (key == "fail_after") fail_after = v.get<std::size_t>();
      else if (key == "latency_us") latency_us = v.get<std::int64_t>();
      else if (key == "overrides") {
        for (const auto& o : v)
          overrides[{o.at("verb").get<std::size_t>(), o.at("noun").get<std::size_t>()}] =
              o.at("response").get<std::string>();
      } else {
        throw ConfigError("mock rules: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mock rules: ") + e.what());
  }

  std::function<bool(std::size_t, std::size_t)> pred;
  if (rule == "verb<=noun") pred = [](std::size_t v, std::size_t n) { return v <= n; };
  else if (rule == "verb==noun") pred = [](std::size_t v, std::size_t n) { return v == n; };
  else if (rule == "verb<noun") pred = [](std::size_t v, std::size_t n) { return v < n; };
  else if (rule == "all") pred = [](std::size_t, std::size_t) { return true; };
  else if (rule == "none") pred = [](std::size_t, std::size_t) { return false; };
  else throw ConfigError("mock rules: unknown rule '" + rule + "'");

  auto counter = std::make_shared<std::atomic<std::size_t>>(0);
  auto responder = [=](const PairQuery& q) -> std::string {
    const std::size_t n = counter->fetch_add(1) + 1;
    if (fail_after && n > *fail_after) throw NetworkError("mock: connection refused");
    if (auto it = overrides.find({q.verb_id, q.noun_id}); it != overrides.end()) return it->second;
    return pred(q.verb_id, q.noun_id) ? yes : no;
  };
  return std::make_unique<MockClient>(responder, std::chrono::microseconds(latency_us));
}

// ---------------------------------------------------------------------------
// Cache

std::string cache_line(const OracleVerdict& v) {
  json j = {{"verb_id", v.verb_id},
            {"noun_id", v.noun_id},
            {"verdict", to_string(v.verdict)},
            {"raw_response", v.raw_response}};
  return j.dump() + "\n";
}

std::vector<OracleVerdict> load_cache(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::split_lines(text);
  const bool torn_tail = !text.empty() && text.back() != '\n';
  std::map<std::pair<std::size_t, std::size_t>, OracleVerdict> by_pair;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (detail::trim(lines[k]).empty()) continue;
    try {
      json j = json::parse(lines[k]);
      OracleVerdict v;
      v.verb_id = j.at("verb_id").get<std::size_t>();
      v.noun_id = j.at("noun_id").get<std::size_t>();
      v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
      v.raw_response = j.at("raw_response").get<std::string>();
      v.cached = true;
      by_pair[{v.verb_id, v.noun_id}] = std::move(v);
    } catch (const std::exception& e) {
      if (torn_tail && k + 1 == lines.size()) break;
      throw ParseError(k + 1, std::string("cache record: ") + e.what());
    }
  }
  std::vector<OracleVerdict> out;
  out.reserve(by_pair.size());
  for (auto& [_, v] : by_pair) out.push_back(std::move(v));
  return out;
}

// ---------------------------------------------------------------------------
// Matrix construction

namespace {

class CacheWriter {
 public:
  explicit CacheWriter(const std::filesystem::path& path) {
    if (path.empty()) return;
    // A torn final record was ignored on load; drop it so appends stay parseable.
    if (std::filesystem::exists(path)) {
      const std::string text = detail::read_file(path);
      if (!text.empty() && text.back() != '\n') {
        const auto cut = text.find_last_of('\n');
        std::filesystem::resize_file(path, cut == std::string::npos ? 0 : cut + 1);
      }
    } else if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) throw IoError("cannot open cache " + path.string() + " for appending");
  }

  void append(const OracleVerdict& v) {
    if (!out_.is_open()) return;
    std::lock_guard lock(mu_);
    out_ << cache_line(v) << std::flush;
    if (!out_) throw IoError("cache write failed");
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace

OracleResult query_matrix(const cooccur::Vocabulary& vocab, const OracleConfig& cfg, ChatClient& client) {
  vocab.validate();
  cfg.validate();
  const std::size_t V = vocab.num_verbs(), N = vocab.num_nouns();

  std::vector<std::optional<OracleVerdict>> slots(V * N);
  if (!cfg.cache_path.empty() && std::filesystem::exists(cfg.cache_path)) {
    for (auto& v : load_cache(cfg.cache_path)) {
      if (v.verb_id >= V || v.noun_id >= N)
        throw VocabMismatch("cache entry (" + std::to_string(v.verb_id) + ", " +
                            std::to_string(v.noun_id) + ") lies outside the " + std::to_string(V) +
                            "x" + std::to_string(N) + " vocabulary");
      const std::size_t cell = v.verb_id * N + v.noun_id;
      slots[cell] = std::move(v);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t c = 0; c < slots.size(); ++c)
    if (!slots[c]) pending.push_back(c);

  std::atomic<std::size_t> network_calls{0};
  if (!pending.empty()) {
    CacheWriter writer(cfg.cache_path);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto ask = [&](std::size_t cell) {
      PairQuery q{cell / N, cell % N, vocab.verbs[cell / N], vocab.nouns[cell % N], {}};
      q.prompt = build_prompt(q.verb, q.noun, cfg.prompt_template);
      OracleVerdict v{q.verb_id, q.noun_id, Verdict::Unknown, {}, false};
      std::chrono::milliseconds delay = cfg.backoff;
      for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
        if (attempt > 0 && delay.count() > 0) {
          std::this_thread::sleep_for(delay);
          delay *= 2;
        }
        network_calls.fetch_add(1);
        try {
          v.raw_response = client.complete(q);
        } catch (const NetworkError&) {
          if (attempt == cfg.retries) throw;
          continue;
        }
        v.verdict = parse_verdict(v.raw_response);
        if (v.verdict != Verdict::Unknown) break;
      }
      writer.append(v);
      slots[cell] = std::move(v);
    };

    auto worker = [&] {
      while (!stop.load()) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pending.size()) return;
        try {
          ask(pending[k]);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          stop.store(true);
        }
      }
    };

    const std::size_t n_workers = std::min(cfg.max_concurrent, pending.size());
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<std::uint8_t> cells(V * N, 0);
  OracleResult result{cooccur::ValidityMask::all_valid(V, N), {}, {}, network_calls.load()};
  result.verdicts.reserve(V * N);
  for (std::size_t c = 0; c < slots.size(); ++c) {
    const auto& v = *slots[c];
    if (v.verdict == Verdict::Unknown) result.unknown.emplace_back(v.verb_id, v.noun_id);
    cells[c] = v.verdict == Verdict::Valid || (v.verdict == Verdict::Unknown && cfg.unknown_as_valid);
    result.verdicts.push_back(v);
  }
  result.mask = cooccur::ValidityMask(V, N, std::move(cells));
  return result;
}

}  // namespace cauda::oracle
