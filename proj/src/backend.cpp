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

#include "abstain/backend.hpp"

#include <string>

#include "abstain/errors.hpp"

namespace abstain {

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStopMatched: return "stop_matched";
    case FinishReason::kLength: return "length";
    case FinishReason::kEndOfText: return "end_of_text";
  }
  return "unknown";
}

void validate_request(const CompletionRequest& request) {
  if (request.max_tokens < 1) {
    throw ArgumentError("max_tokens must be >= 1, got " + std::to_string(request.max_tokens));
  }
  if (!request.want_logprobs) {
    throw ArgumentError("completion requests must ask for logprobs");
  }
  if (request.prompt_chars > request.context.size()) {
    throw ArgumentError("prompt_chars exceeds the context length");
  }
  for (const auto& s : request.stop) {
    if (s.empty()) throw ArgumentError("stop strings must be nonempty");
  }
}

bool truncate_at_stop(std::vector<TokenEvent>& tokens, const std::vector<std::string>& stops) {
  if (stops.empty() || tokens.empty()) return false;
  std::string text;
  for (const auto& t : tokens) text += t.text;
  std::size_t first = std::string::npos;
  for (const auto& s : stops) {
    const auto at = text.find(s);
    if (at < first) first = at;
  }
  if (first == std::string::npos) return false;
  std::size_t end = 0;
  std::size_t keep = 0;
  for (; keep < tokens.size(); ++keep) {
    end += tokens[keep].text.size();
    if (end > first) break;
  }
  tokens.resize(keep);
  return true;
}

}  // namespace abstain
