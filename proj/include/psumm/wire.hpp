#pragma once

// JSON bodies of the backend HTTP contract.
//
//   POST /v1/complete  {"prompt", "max_tokens", "logprobs"}
//                      -> {"text", "tokens": [{"text", "logprob"}]}
//   POST /v1/train     {"examples": [{"input", "target"}], "epochs", "config"}
//                      -> {"model_id", "epochs_completed"}
//   POST /v1/summarize {"model_id", "input", "max_tokens"} -> {"text"}
//   POST /v1/embed     {"sentences": [str]} -> {"vectors": [[float]], "dim"}
//   non-2xx            {"error": str}
//
// Parsers throw SchemaError on any shape violation.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/backend_types.hpp"
#include "psumm/errors.hpp"

namespace psumm::wire {

using nlohmann::json;

class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline const json& require(const json& j, const char* key, json::value_t type, const char* where) {
  if (!j.is_object()) throw SchemaError(std::string(where) + ": body is not an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string(where) + ": missing '" + key + "'");
  bool ok = it->type() == type ||
            (type == json::value_t::number_float && it->is_number()) ||
            (type == json::value_t::number_unsigned && it->is_number_integer() && it->get<long long>() >= 0);
  if (!ok) throw SchemaError(std::string(where) + ": '" + key + "' has the wrong type");
  return *it;
}

}  // namespace detail

struct TrainRequest {
  std::vector<backends::TrainingExample> examples;
  std::size_t epochs = 1;
  json config = json::object();

  friend bool operator==(const TrainRequest&, const TrainRequest&) = default;
};

struct SummarizeRequest {
  std::string model_id;
  std::string input;
  std::size_t max_tokens = 0;

  friend bool operator==(const SummarizeRequest&, const SummarizeRequest&) = default;
};

struct EmbedResponse {
  std::vector<backends::EmbeddingVector> vectors;
  std::size_t dim = 0;
};

// /v1/complete ---------------------------------------------------------------

inline json complete_request(const backends::CompletionRequest& r) {
  return {{"prompt", r.prompt}, {"max_tokens", r.max_tokens}, {"logprobs", r.logprobs}, {"temperature", r.temperature}};
}

inline backends::CompletionRequest parse_complete_request(const json& j) {
  backends::CompletionRequest r;
  r.prompt = detail::require(j, "prompt", json::value_t::string, "complete request").get<std::string>();
  r.max_tokens =
      detail::require(j, "max_tokens", json::value_t::number_unsigned, "complete request").get<std::size_t>();
  r.logprobs = detail::require(j, "logprobs", json::value_t::boolean, "complete request").get<bool>();
  if (auto it = j.find("temperature"); it != j.end() && it->is_number()) r.temperature = it->get<double>();
  return r;
}

inline json complete_response(const backends::CompletionResult& r) {
  json toks = json::array();
  for (const auto& t : r.tokens) toks.push_back({{"text", t.text}, {"logprob", t.logprob}});
  return {{"text", r.text}, {"tokens", toks}};
}

inline backends::CompletionResult parse_complete_response(const json& j) {
  backends::CompletionResult r;
  r.text = detail::require(j, "text", json::value_t::string, "complete response").get<std::string>();
  // "tokens" may be absent when logprobs were not requested.
  if (auto it = j.find("tokens"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("complete response: 'tokens' is not an array");
    for (const auto& t : *it) {
      backends::TokenLogprob tl;
      tl.text = detail::require(t, "text", json::value_t::string, "complete token").get<std::string>();
      tl.logprob = detail::require(t, "logprob", json::value_t::number_float, "complete token").get<double>();
      r.tokens.push_back(std::move(tl));
    }
  }
  try {
    backends::validate(r);
  } catch (const PreconditionError& e) {
    throw SchemaError(std::string("complete response: ") + e.what());
  }
  return r;
}

// /v1/train ------------------------------------------------------------------

inline json train_request(const TrainRequest& r) {
  json ex = json::array();
  for (const auto& e : r.examples) ex.push_back({{"input", e.input}, {"target", e.target}});
  return {{"examples", ex}, {"epochs", r.epochs}, {"config", r.config}};
}

inline TrainRequest parse_train_request(const json& j) {
  TrainRequest r;
  for (const auto& e : detail::require(j, "examples", json::value_t::array, "train request")) {
    r.examples.push_back({detail::require(e, "input", json::value_t::string, "train example").get<std::string>(),
                          detail::require(e, "target", json::value_t::string, "train example").get<std::string>()});
  }
  r.epochs = detail::require(j, "epochs", json::value_t::number_unsigned, "train request").get<std::size_t>();
  r.config = detail::require(j, "config", json::value_t::object, "train request");
  return r;
}

inline json train_response(const backends::ModelHandle& h) {
  return {{"model_id", h.id}, {"epochs_completed", h.epochs_completed}};
}

inline backends::ModelHandle parse_train_response(const json& j) {
  backends::ModelHandle h;
  h.id = detail::require(j, "model_id", json::value_t::string, "train response").get<std::string>();
  h.epochs_completed =
      detail::require(j, "epochs_completed", json::value_t::number_unsigned, "train response").get<std::size_t>();
  return h;
}

// /v1/summarize --------------------------------------------------------------

inline json summarize_request(const SummarizeRequest& r) {
  return {{"model_id", r.model_id}, {"input", r.input}, {"max_tokens", r.max_tokens}};
}

inline SummarizeRequest parse_summarize_request(const json& j) {
  SummarizeRequest r;
  r.model_id = detail::require(j, "model_id", json::value_t::string, "summarize request").get<std::string>();
  r.input = detail::require(j, "input", json::value_t::string, "summarize request").get<std::string>();
  r.max_tokens =
      detail::require(j, "max_tokens", json::value_t::number_unsigned, "summarize request").get<std::size_t>();
  return r;
}

inline json summarize_response(const std::string& text) { return {{"text", text}}; }

inline std::string parse_summarize_response(const json& j) {
  return detail::require(j, "text", json::value_t::string, "summarize response").get<std::string>();
}

// /v1/embed ------------------------------------------------------------------

inline json embed_request(const std::vector<std::string>& sentences) { return {{"sentences", sentences}}; }

inline std::vector<std::string> parse_embed_request(const json& j) {
  std::vector<std::string> out;
  for (const auto& s : detail::require(j, "sentences", json::value_t::array, "embed request")) {
    if (!s.is_string()) throw SchemaError("embed request: sentence is not a string");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline json embed_response(const std::vector<backends::EmbeddingVector>& vectors) {
  json vs = json::array();
  for (const auto& v : vectors) vs.push_back(v.values);
  return {{"vectors", vs}, {"dim", vectors.empty() ? 0 : vectors.front().dimension()}};
}

// Throws DimensionMismatchError when a vector disagrees with "dim".
inline EmbedResponse parse_embed_response(const json& j) {
  EmbedResponse r;
  r.dim = detail::require(j, "dim", json::value_t::number_unsigned, "embed response").get<std::size_t>();
  for (const auto& v : detail::require(j, "vectors", json::value_t::array, "embed response")) {
    if (!v.is_array()) throw SchemaError("embed response: vector is not an array");
    backends::EmbeddingVector ev;
    for (const auto& x : v) {
      if (!x.is_number()) throw SchemaError("embed response: vector component is not a number");
      double d = x.get<double>();
      if (!std::isfinite(d)) throw SchemaError("embed response: non-finite component");
      ev.values.push_back(d);
    }
    if (ev.dimension() != r.dim)
      throw DimensionMismatchError("embed response: vector of dimension " + std::to_string(ev.dimension()) +
                                   " but dim is " + std::to_string(r.dim));
    r.vectors.push_back(std::move(ev));
  }
  return r;
}

// errors ---------------------------------------------------------------------

inline json error_body(const std::string& message) { return {{"error", message}}; }

inline std::string parse_error_body(const json& j) {
  return detail::require(j, "error", json::value_t::string, "error body").get<std::string>();
}

}  // namespace psumm::wire
