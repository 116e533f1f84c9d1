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

// Token generation interface used by the budget forcer.
//
// Every backend decodes greedily: an identical request against identical
// backend state yields an identical result. Implementations must accept
// concurrent complete() calls.

#ifndef ABSTAIN_BACKEND_HPP_
#define ABSTAIN_BACKEND_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

enum class FinishReason {
  kStopMatched,  // a requested stop string was produced (and excluded)
  kLength,       // max_tokens reached
  kEndOfText,    // the model emitted its end-of-sequence token
};

std::string_view to_string(FinishReason reason);

struct CompletionRequest {
  std::string context;
  int max_tokens = 1;
  std::vector<std::string> stop;
  bool want_logprobs = true;
  // Length of the question prompt at the head of `context`. Never sent over
  // the wire; offline backends use it to identify the generation lineage.
  std::size_t prompt_chars = 0;
};

struct CompletionResult {
  std::vector<TokenEvent> tokens;  // stop string excluded
  FinishReason finish = FinishReason::kLength;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string_view name() const = 0;
};

// Throws ArgumentError when `request` breaks the interface contract.
void validate_request(const CompletionRequest& request);

// Drops every token from the one where the earliest occurrence of any stop
// string begins. Returns true when a stop string was found.
bool truncate_at_stop(std::vector<TokenEvent>& tokens, const std::vector<std::string>& stops);

}  // namespace abstain

#endif  // ABSTAIN_BACKEND_HPP_
