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

// Deterministic offline backends.
//
// Both backends model a reasoning LM as a fixed stream of thinking tokens
// interrupted by "end attempts" (the model trying to close its reasoning).
// A request is answered as a pure function of its context: the backend
// replays its own stream against the text after the prompt, accepting the
// configured wait text at end attempts, until it either reaches the end of
// the context (thinking phase: continue the stream) or meets the delimiter
// (answer phase: emit the answer for the thinking length reached).
//
// Because the result depends only on the request, both backends are
// trivially safe for concurrent use, and the continuation for a shorter
// max_tokens is always a prefix of the one for a longer max_tokens.

#ifndef ABSTAIN_OFFLINE_BACKENDS_HPP_
#define ABSTAIN_OFFLINE_BACKENDS_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abstain/backend.hpp"

namespace abstain {

struct EndAttempt {
  std::size_t position = 0;  // model-token offset in the thinking stream
  FinishReason kind = FinishReason::kStopMatched;  // or kEndOfText
};

// The per-prompt stream an offline backend replays.
class ThinkingStream {
 public:
  virtual ~ThinkingStream() = default;

  virtual std::size_t length() const = 0;  // SIZE_MAX when unbounded
  virtual TokenEvent token(std::size_t i) const = 0;
  // The k-th end attempt, or nullopt once the model no longer tries to stop.
  // Positions are non-decreasing in k.
  virtual std::optional<EndAttempt> attempt(std::size_t k) const = 0;
  // Answer-phase tokens after `model_tokens` stream tokens and `attempts`
  // suppressed end attempts.
  virtual std::vector<TokenEvent> answer(std::size_t model_tokens,
                                         std::size_t attempts) const = 0;
};

class StreamBackend : public Backend {
 public:
  StreamBackend(std::string delimiter, std::string wait_text);

  CompletionResult complete(const CompletionRequest& request) override;

  const std::string& delimiter() const { return delimiter_; }
  const std::string& wait_text() const { return wait_text_; }
  std::uint64_t requests() const { return requests_.load(); }

 protected:
  // Resolves the stream for `request`; returns the prompt length through
  // `prompt_chars`. Throws ArgumentError for unknown lineages.
  virtual std::shared_ptr<const ThinkingStream> lineage(const CompletionRequest& request,
                                                        std::size_t& prompt_chars) const = 0;

 private:
  std::string delimiter_;
  std::string wait_text_;
  std::atomic<std::uint64_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptSegment {
  std::vector<TokenEvent> tokens;  // a token equal to the delimiter is an end attempt
  FinishReason finish = FinishReason::kLength;
};

// Answer emitted once at least `after_tokens` stream tokens were thought.
struct ScriptAnswer {
  std::size_t after_tokens = 0;
  std::vector<TokenEvent> tokens;
};

struct ScriptedQuestion {
  std::string prompt;
  std::vector<ScriptSegment> thinking;
  std::vector<ScriptAnswer> answers;
};

struct ScriptedBackendSpec {
  std::string delimiter = "</think>";
  std::string wait_text = "Wait";
  std::vector<ScriptedQuestion> questions;
};

// Parses the JSON fixture format documented in the README.
ScriptedBackendSpec parse_scripted_spec(std::string_view json_text);
ScriptedBackendSpec load_scripted_spec(const std::filesystem::path& path);

// Thinking segments are concatenated into one stream. After the stream is
// exhausted the model keeps emitting end-of-text with no tokens.
class ScriptedBackend final : public StreamBackend {
 public:
  explicit ScriptedBackend(ScriptedBackendSpec spec);
  std::string_view name() const override { return "scripted"; }

 protected:
  std::shared_ptr<const ThinkingStream> lineage(const CompletionRequest& request,
                                                std::size_t& prompt_chars) const override;

 private:
  std::map<std::string, std::shared_ptr<const ThinkingStream>, std::less<>> streams_;
};

// ---------------------------------------------------------------------------
// Synthetic backend

struct AnswerDistribution {
  AnswerFormat format = AnswerFormat::kInteger3;
  std::string prefix = " The answer is ";
  bool split_digits = true;  // integer3: one token per digit, else one token

  // Fixed mode: when `fixed_answer` is set every answer is that string, with
  // one token per character carrying the listed logprobs.
  std::string fixed_answer;
  std::vector<double> fixed_logprobs;

  // Stochastic mode. Progress x = min(1, thinking_tokens / horizon). A
  // question answers correctly once its latent difficulty falls below
  // p_correct(x); confidence is drawn around the class mean for x.
  double horizon = 8000.0;
  double p_correct_start = 0.2;
  double p_correct_end = 0.8;
  double confidence_correct_start = 0.55;
  double confidence_correct_end = 0.97;
  double confidence_incorrect_start = 0.35;
  double confidence_incorrect_end = 0.45;
  double spread = 0.15;
  double parse_fail_rate = 0.0;
  std::map<std::string, std::string> gold_by_prompt;  // hash-derived when absent
};

struct SyntheticProfile {
  // Delimiter emission schedule: absolute stream positions (non-decreasing)
  // at which the model tries to end, then one attempt every `repeat_every`
  // tokens after the last listed position (0: no further attempts).
  std::vector<std::size_t> end_attempts;
  std::size_t repeat_every = 0;
  double end_of_text_fraction = 0.0;  // share of attempts surfacing as EOS
  AnswerDistribution answer;
};

// Parses a profile object; unspecified fields keep their defaults.
SyntheticProfile parse_synthetic_profile(std::string_view json_text);

class SyntheticBackend final : public StreamBackend {
 public:
  SyntheticBackend(std::uint64_t seed, SyntheticProfile profile,
                   std::string delimiter = "</think>", std::string wait_text = "Wait");
  std::string_view name() const override { return "synthetic"; }

  const SyntheticProfile& profile() const { return *profile_; }

 protected:
  // Requires request.prompt_chars > 0.
  std::shared_ptr<const ThinkingStream> lineage(const CompletionRequest& request,
                                                std::size_t& prompt_chars) const override;

 private:
  std::uint64_t seed_;
  std::shared_ptr<const SyntheticProfile> profile_;
};

}  // namespace abstain

#endif  // ABSTAIN_OFFLINE_BACKENDS_HPP_
