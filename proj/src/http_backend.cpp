/*
 * Copyright 2026 The Abstain Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "abstain/http_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "abstain/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace abstain {
namespace {

using nlohmann::json;

FinishReason classify_finish(const json& choice, std::vector<TokenEvent>& tokens,
                             const CompletionRequest& request) {
  const std::string reason = choice.value("finish_reason", std::string());
  // Some servers keep the stop string in the token stream even though the
  // text field omits it.
  if (truncate_at_stop(tokens, request.stop)) return FinishReason::kStopMatched;
  if (reason == "length") return FinishReason::kLength;
  if (reason == "stop") {
    // vLLM reports the matched stop string in stop_reason; EOS leaves it
    // null (or the token id).
    if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) {
      const auto s = choice["stop_reason"].get<std::string>();
      if (std::find(request.stop.begin(), request.stop.end(), s) != request.stop.end()) {
        return FinishReason::kStopMatched;
      }
    }
    if (choice.contains("stopping_word") && choice["stopping_word"].is_string() &&
        !choice["stopping_word"].get<std::string>().empty()) {
      return FinishReason::kStopMatched;
    }
  }
  return FinishReason::kEndOfText;
}

}  // namespace

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw ArgumentError("endpoint must start with http:// or https://");
  ep.scheme = url.substr(0, sep);
  if (ep.scheme != "http" && ep.scheme != "https") {
    throw ArgumentError("unsupported endpoint scheme '" + ep.scheme + "'");
  }
  std::string rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "" : rest.substr(slash);
  if (ep.path.empty() || ep.path == "/") ep.path = "/v1/completions";
  ep.port = ep.scheme == "https" ? 443 : 80;
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos && authority.find(']') == std::string::npos) {
    const std::string port = authority.substr(colon + 1);
    authority = authority.substr(0, colon);
    try {
      std::size_t used = 0;
      ep.port = std::stoi(port, &used);
      if (used != port.size() || ep.port <= 0 || ep.port > 65535) throw std::out_of_range("port");
    } catch (const std::exception&) {
      throw ArgumentError("invalid endpoint port '" + port + "'");
    }
  }
  if (authority.empty()) throw ArgumentError("endpoint has no host");
  ep.host = authority;
  return ep;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {
  if (config_.max_attempts < 1) throw ArgumentError("max_attempts must be >= 1");
  if (config_.timeout.count() <= 0) throw ArgumentError("timeout must be positive");
  rng_.seed(config_.jitter_seed != 0 ? config_.jitter_seed : std::random_device{}());
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint_.scheme == "https") {
    throw ArgumentError("this build has no TLS support; use an http:// endpoint");
  }
#endif
}

std::string HttpBackend::request_body(const CompletionRequest& request) const {
  json body;
  body["model"] = config_.model;
  body["prompt"] = request.context;
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = 0;
  if (!request.stop.empty()) body["stop"] = request.stop;
  body["logprobs"] = 1;
  body["echo"] = false;
  return body.dump();
}

CompletionResult HttpBackend::parse_response(const std::string& body,
                                             const CompletionRequest& request) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("endpoint returned malformed JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ParseError("endpoint response has no choices");
  }
  const json& choice = doc["choices"][0];
  const json* lp = choice.contains("logprobs") ? &choice["logprobs"] : nullptr;
  constexpr const char* kHint =
      "endpoint returned no per-token logprobs; enable logprobs on the server "
      "(e.g. vLLM --max-logprobs, llama.cpp n_probs) and use a completions endpoint";
  if (lp == nullptr || lp->is_null()) throw CapabilityError(kHint);

  CompletionResult result;
  if (lp->contains("tokens") && lp->contains("token_logprobs")) {
    const auto& toks = (*lp)["tokens"];
    const auto& lps = (*lp)["token_logprobs"];
    if (!toks.is_array() || !lps.is_array() || toks.size() != lps.size()) throw CapabilityError(kHint);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!toks[i].is_string() || !lps[i].is_number()) throw CapabilityError(kHint);
      result.tokens.push_back({toks[i].get<std::string>(), std::min(0.0, lps[i].get<double>()), i});
    }
  } else if (lp->contains("content") && (*lp)["content"].is_array()) {
    std::size_t i = 0;
    for (const auto& entry : (*lp)["content"]) {
      if (!entry.contains("token") || !entry.contains("logprob") || !entry["logprob"].is_number()) {
        throw CapabilityError(kHint);
      }
      result.tokens.push_back(
          {entry["token"].get<std::string>(), std::min(0.0, entry["logprob"].get<double>()), i++});
    }
  } else {
    throw CapabilityError(kHint);
  }

  result.finish = classify_finish(choice, result.tokens, request);
  if (result.tokens.size() > static_cast<std::size_t>(request.max_tokens)) {
    result.tokens.resize(static_cast<std::size_t>(request.max_tokens));
    result.finish = FinishReason::kLength;
  }
  return result;
}

std::chrono::milliseconds HttpBackend::backoff(int attempt) {
  const auto exp = config_.backoff_base.count() * (1LL << std::min(attempt - 1, 20));
  const auto ceiling = std::min<long long>(exp, config_.backoff_cap.count());
  std::lock_guard<std::mutex> lock(rng_mu_);
  std::uniform_int_distribution<long long> dist(ceiling / 2, std::max<long long>(ceiling, 0));
  return std::chrono::milliseconds(dist(rng_));
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  const std::string body = request_body(request);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string base =
      endpoint_.scheme + "://" + endpoint_.host + ":" + std::to_string(endpoint_.port);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(std::min<time_t>(secs.count(), 30), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    last_attempts_.store(static_cast<std::uint64_t>(attempt));
    total_attempts_.fetch_add(1);
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure contacting " + base + ": " + httplib::to_string(res.error());
      if (attempt == config_.max_attempts) break;
      std::this_thread::sleep_for(backoff(attempt));
      continue;
    }
    if (res->status == 200) return parse_response(res->body, request);

    HttpError err(res->status, "endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                   res->body.substr(0, 200));
    if (!err.retryable() || attempt == config_.max_attempts) throw err;
    auto delay = backoff(attempt);
    if (res->status == 429 && res->has_header("Retry-After")) {
      try {
        const auto hinted = std::chrono::seconds(std::stoi(res->get_header_value("Retry-After")));
        delay = std::min<std::chrono::milliseconds>(
            std::max<std::chrono::milliseconds>(delay, hinted), config_.backoff_cap);
      } catch (const std::exception&) {
      }
    }
    std::this_thread::sleep_for(delay);
  }
  throw TransportError(last_error + " (after " + std::to_string(config_.max_attempts) +
                       " attempts)");
}

}  // namespace abstain
