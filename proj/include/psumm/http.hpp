#pragma once

// HTTP adapters for the backend contract (see wire.hpp). Transient failures
// (no response, 429, 502/503/504) are retried with exponential backoff;
// every attempt of one logical call carries the same X-Request-Id so the
// server can deduplicate.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "psumm/backend_types.hpp"
#include "psumm/errors.hpp"
#include "psumm/text.hpp"
#include "psumm/wire.hpp"

namespace psumm::http {

struct RetryPolicy {
  std::size_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

struct ClientOptions {
  std::string base_url;  // scheme://host:port
  std::string api_key;   // sent as a bearer token when non-empty
  RetryPolicy retry;
  std::chrono::seconds timeout{300};
  std::ptrdiff_t max_in_flight = 4;
};

class HttpClient {
 public:
  explicit HttpClient(ClientOptions opts)
      : opts_(std::move(opts)),
        slots_(std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, opts_.max_in_flight))),
        salt_(std::random_device{}()) {
    if (opts_.base_url.empty()) throw ConfigError("backend URL is empty");
    while (!opts_.base_url.empty() && opts_.base_url.back() == '/') opts_.base_url.pop_back();
  }

  const ClientOptions& options() const noexcept { return opts_; }
  std::size_t attempts() const noexcept { return attempts_.load(); }

  // POSTs body to path. Returns the parsed 2xx body; throws TransportError
  // (status set) for any other final outcome.
  nlohmann::json post(const std::string& path, const nlohmann::json& body) {
    const std::string payload = body.dump();
    const std::string request_id = "psumm-" + text::hex64(text::fnv1a(payload, salt_ ^ ++counter_));
    httplib::Headers headers{{"X-Request-Id", request_id}};
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    auto backoff = opts_.retry.initial_backoff;
    std::string last_error;
    int last_status = 0;
    for (std::size_t attempt = 1; attempt <= std::max<std::size_t>(1, opts_.retry.max_attempts); ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(backoff);
        backoff = std::min(opts_.retry.max_backoff,
                           std::chrono::milliseconds(static_cast<long long>(backoff.count() * opts_.retry.multiplier)));
      }
      ++attempts_;
      httplib::Result res = send(path, headers, payload);
      if (!res) {
        last_status = 0;
        last_error = "no response from " + opts_.base_url + path + ": " + httplib::to_string(res.error());
        continue;
      }
      const int status = res->status;
      if (status >= 200 && status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
          throw wire::SchemaError(path + ": response is not JSON: " + e.what());
        }
      }
      last_status = status;
      last_error = path + " returned " + std::to_string(status) + ": " + error_message(res->body);
      if (status == 429 || status == 502 || status == 503 || status == 504) continue;
      throw TransportError(last_error, status);
    }
    if (last_status == 429) throw RateLimitError(last_error);
    throw TransportError(last_error, last_status);
  }

 private:
  static std::string error_message(const std::string& body) {
    try {
      return wire::parse_error_body(nlohmann::json::parse(body));
    } catch (const std::exception&) {
      return body.substr(0, 200);
    }
  }

  httplib::Result send(const std::string& path, const httplib::Headers& headers, const std::string& payload) {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};
    httplib::Client cli(opts_.base_url);
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(opts_.timeout);
    cli.set_write_timeout(opts_.timeout);
    return cli.Post(path, headers, payload, "application/json");
  }

  ClientOptions opts_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  std::uint64_t salt_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<std::size_t> attempts_{0};
};

class HttpCompletionBackend : public backends::CompletionBackend {
 public:
  explicit HttpCompletionBackend(ClientOptions opts) : client_(std::move(opts)) {}

  backends::CompletionResult complete(const backends::CompletionRequest& req) override {
    nlohmann::json body;
    try {
      body = client_.post("/v1/complete", wire::complete_request(req));
    } catch (const RateLimitError&) {
      throw;
    } catch (const TransportError& e) {
      if (e.status() == 413) throw TokenLimitError(e.what());
      throw;
    }
    auto result = wire::parse_complete_response(body);
    if (req.logprobs && !result.has_logprobs() && !result.text.empty())
      throw MissingLogprobsError("backend returned no token logprobs");
    return result;
  }

  HttpClient& client() noexcept { return client_; }

 private:
  HttpClient client_;
};

class HttpSummarizerBackend : public backends::SummarizerBackend {
 public:
  explicit HttpSummarizerBackend(ClientOptions opts) : client_(std::move(opts)) {}

  backends::ModelHandle train(std::span<const backends::TrainingExample> examples, std::size_t epochs,
                              const nlohmann::json& config) override {
    if (examples.empty()) throw PreconditionError("train requires at least one example");
    if (epochs < 1) throw PreconditionError("train requires epochs >= 1");
    wire::TrainRequest req{{examples.begin(), examples.end()}, epochs, config.is_object() ? config : nlohmann::json::object()};
    nlohmann::json body;
    try {
      body = client_.post("/v1/train", wire::train_request(req));
    } catch (const RateLimitError&) {
      throw;
    } catch (const TransportError& e) {
      if (e.status() >= 400 && e.status() != 0) throw TrainingError(e.what());
      throw;
    }
    auto handle = wire::parse_train_response(body);
    handle.trained_on = examples.size();
    return handle;
  }

  std::string summarize(const backends::ModelHandle& model, std::string_view input, std::size_t max_tokens) override {
    try {
      return wire::parse_summarize_response(
          client_.post("/v1/summarize", wire::summarize_request({model.id, std::string(input), max_tokens})));
    } catch (const RateLimitError&) {
      throw;
    } catch (const TransportError& e) {
      if (e.status() == 404) throw UnknownHandleError(e.what());
      throw;
    }
  }

  HttpClient& client() noexcept { return client_; }

 private:
  HttpClient client_;
};

class HttpEmbedder : public backends::Embedder {
 public:
  explicit HttpEmbedder(ClientOptions opts) : client_(std::move(opts)) {}

  std::vector<backends::EmbeddingVector> embed(std::span<const std::string> sentences) override {
    if (sentences.empty()) throw PreconditionError("embed requires at least one sentence");
    std::vector<std::string> batch(sentences.begin(), sentences.end());
    auto res = wire::parse_embed_response(client_.post("/v1/embed", wire::embed_request(batch)));
    if (res.vectors.size() != sentences.size())
      throw DimensionMismatchError("embed returned " + std::to_string(res.vectors.size()) + " vectors for " +
                                   std::to_string(sentences.size()) + " sentences");
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, res.dim) && expected != res.dim)
      throw DimensionMismatchError("embedder dimension changed from " + std::to_string(expected) + " to " +
                                   std::to_string(res.dim));
    return std::move(res.vectors);
  }

  HttpClient& client() noexcept { return client_; }

 private:
  HttpClient client_;
  std::atomic<std::size_t> dim_{0};
};

}  // namespace psumm::http
