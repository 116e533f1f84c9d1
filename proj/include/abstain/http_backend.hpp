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

// Client for completions-style (not chat) HTTP endpoints that return
// per-token log-probabilities, e.g. vLLM or llama.cpp server `/v1/completions`.

#ifndef ABSTAIN_HTTP_BACKEND_HPP_
#define ABSTAIN_HTTP_BACKEND_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>

#include "abstain/backend.hpp"

namespace abstain {

struct HttpBackendConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/completions";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";  // variable holding the bearer token
  std::chrono::milliseconds timeout{120'000};
  int max_attempts = 5;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30'000};
  std::uint64_t jitter_seed = 0;  // 0 draws from std::random_device
};

struct Endpoint {
  std::string scheme;  // "http" | "https"
  std::string host;
  int port = 0;
  std::string path;
};

// Throws ArgumentError for anything but http(s)://host[:port][/path].
// An empty path defaults to /v1/completions.
Endpoint parse_endpoint(const std::string& url);

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  // Retries 429 and 5xx responses and transport failures with exponential
  // backoff and jitter, up to max_attempts in total. Other 4xx statuses fail
  // immediately with HttpError.
  CompletionResult complete(const CompletionRequest& request) override;
  std::string_view name() const override { return "network"; }

  // Attempts made by the most recent complete() call, and in total.
  std::uint64_t last_attempts() const { return last_attempts_.load(); }
  std::uint64_t total_attempts() const { return total_attempts_.load(); }

  std::string request_body(const CompletionRequest& request) const;

  // Parses a completions response. Throws CapabilityError when the server did
  // not return per-token logprobs.
  static CompletionResult parse_response(const std::string& body,
                                         const CompletionRequest& request);

 private:
  std::chrono::milliseconds backoff(int attempt);

  HttpBackendConfig config_;
  Endpoint endpoint_;
  std::atomic<std::uint64_t> last_attempts_{0};
  std::atomic<std::uint64_t> total_attempts_{0};
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

}  // namespace abstain

#endif  // ABSTAIN_HTTP_BACKEND_HPP_
