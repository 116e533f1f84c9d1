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

#include "abstain/offline_backends.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "abstain/errors.hpp"
#include "json.hpp"

namespace abstain {
namespace {

using nlohmann::json;

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return splitmix64(a ^ splitmix64(b ^ splitmix64(c ^ splitmix64(d))));
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool starts_at(std::string_view s, std::size_t at, std::string_view prefix) {
  return s.size() - at >= prefix.size() && s.compare(at, prefix.size(), prefix) == 0;
}

double lerp(double a, double b, double x) { return a + (b - a) * x; }

FinishReason parse_finish(const std::string& s) {
  if (s == "stop_matched") return FinishReason::kStopMatched;
  if (s == "length") return FinishReason::kLength;
  if (s == "end_of_text") return FinishReason::kEndOfText;
  throw ParseError("unknown finish reason '" + s + "'");
}

std::vector<TokenEvent> parse_tokens(const json& arr) {
  if (!arr.is_array()) throw ParseError("script tokens must be an array of [text, logprob]");
  std::vector<TokenEvent> out;
  for (const auto& t : arr) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_number()) {
      throw ParseError("script token must be [text, logprob]");
    }
    const double lp = t[1].get<double>();
    if (!(lp <= 0.0)) throw ValidationError("script token logprob must be <= 0");
    out.push_back({t[0].get<std::string>(), lp, out.size()});
  }
  return out;
}

// ---------------------------------------------------------------------------

class ScriptStream final : public ThinkingStream {
 public:
  ScriptStream(const ScriptedQuestion& q, const std::string& delimiter) {
    for (const auto& seg : q.thinking) {
      bool ended_on_delimiter = false;
      for (const auto& t : seg.tokens) {
        ended_on_delimiter = t.text == delimiter;
        if (ended_on_delimiter) {
          attempts_.push_back({tokens_.size(), FinishReason::kStopMatched});
        } else {
          tokens_.push_back(t);
        }
      }
      if (seg.finish == FinishReason::kStopMatched && !ended_on_delimiter) {
        attempts_.push_back({tokens_.size(), FinishReason::kStopMatched});
      } else if (seg.finish == FinishReason::kEndOfText) {
        attempts_.push_back({tokens_.size(), FinishReason::kEndOfText});
      }
    }
    answers_ = q.answers;
    std::stable_sort(answers_.begin(), answers_.end(),
                     [](const auto& a, const auto& b) { return a.after_tokens < b.after_tokens; });
  }

  std::size_t length() const override { return tokens_.size(); }
  TokenEvent token(std::size_t i) const override { return tokens_.at(i); }

  std::optional<EndAttempt> attempt(std::size_t k) const override {
    if (k < attempts_.size()) return attempts_[k];
    return EndAttempt{tokens_.size(), FinishReason::kEndOfText};
  }

  std::vector<TokenEvent> answer(std::size_t model_tokens, std::size_t) const override {
    const ScriptAnswer* chosen = nullptr;
    for (const auto& a : answers_) {
      if (a.after_tokens <= model_tokens) chosen = &a;
    }
    return chosen ? chosen->tokens : std::vector<TokenEvent>{};
  }

 private:
  std::vector<TokenEvent> tokens_;
  std::vector<EndAttempt> attempts_;
  std::vector<ScriptAnswer> answers_;
};

// ---------------------------------------------------------------------------

constexpr std::array<std::string_view, 20> kFiller = {
    " the", " we", " so", " compute", " check", " thus", " let", " consider",
    " value", " term", " sum", " case", " note", " step", " then", " now",
    " if", " and", " of", " is"};

class SyntheticStream final : public ThinkingStream {
 public:
  SyntheticStream(std::uint64_t seed, std::string_view prompt,
                  std::shared_ptr<const SyntheticProfile> profile)
      : seed_(seed), prompt_hash_(fnv1a(prompt)), profile_(std::move(profile)) {
    const auto& dist = profile_->answer;
    if (auto it = dist.gold_by_prompt.find(std::string(prompt)); it != dist.gold_by_prompt.end()) {
      gold_ = it->second;
    } else if (dist.format == AnswerFormat::kInteger3) {
      const auto v = mix(seed_, prompt_hash_, 0, 20) % 1000;
      gold_ = std::string(v < 10 ? "00" : v < 100 ? "0" : "") + std::to_string(v);
    } else {
      gold_ = std::string(1, static_cast<char>('A' + mix(seed_, prompt_hash_, 0, 20) % 4));
    }
  }

  std::size_t length() const override { return kUnbounded; }

  TokenEvent token(std::size_t i) const override {
    const auto h = mix(seed_, prompt_hash_, i, 1);
    const double lp = -(0.01 + 2.5 * unit(mix(seed_, prompt_hash_, i, 2)));
    return {std::string(kFiller[h % kFiller.size()]), lp, 0};
  }

  std::optional<EndAttempt> attempt(std::size_t k) const override {
    const auto& listed = profile_->end_attempts;
    std::size_t pos = 0;
    if (k < listed.size()) {
      pos = listed[k];
    } else if (profile_->repeat_every > 0) {
      const std::size_t base = listed.empty() ? 0 : listed.back();
      pos = base + (k - listed.size() + 1) * profile_->repeat_every;
    } else {
      return std::nullopt;
    }
    const bool eos = unit(mix(seed_, prompt_hash_, k, 3)) < profile_->end_of_text_fraction;
    return EndAttempt{pos, eos ? FinishReason::kEndOfText : FinishReason::kStopMatched};
  }

  std::vector<TokenEvent> answer(std::size_t model_tokens, std::size_t) const override {
    const auto& d = profile_->answer;
    std::vector<TokenEvent> out;
    out.push_back({d.prefix, -0.5, 0});
    if (!d.fixed_answer.empty()) {
      for (std::size_t j = 0; j < d.fixed_answer.size(); ++j) {
        out.push_back({std::string(1, d.fixed_answer[j]), d.fixed_logprobs[j], 0});
      }
      out.push_back({".", -0.3, 0});
      return out;
    }

    const double x = d.horizon > 0 ? std::min(1.0, static_cast<double>(model_tokens) / d.horizon)
                                   : 1.0;
    if (unit(mix(seed_, prompt_hash_, model_tokens, 12)) < d.parse_fail_rate) {
      return {{" I", -1.0, 0}, {" am", -1.0, 0}, {" not", -0.7, 0}, {" sure", -0.4, 0}};
    }
    const double difficulty = unit(mix(seed_, prompt_hash_, 0, 10));
    const bool correct = difficulty < lerp(d.p_correct_start, d.p_correct_end, x);
    const double mean = correct ? lerp(d.confidence_correct_start, d.confidence_correct_end, x)
                                : lerp(d.confidence_incorrect_start, d.confidence_incorrect_end, x);
    const double jitter = d.spread * (2.0 * unit(mix(seed_, prompt_hash_, model_tokens, 11)) - 1.0);
    const double conf = std::clamp(mean + jitter, 1e-4, 1.0 - 1e-9);
    const double total = std::log(conf);

    std::string text = gold_;
    if (!correct) {
      const auto h = mix(seed_, prompt_hash_, model_tokens, 13);
      if (d.format == AnswerFormat::kInteger3) {
        const int v = (std::stoi(gold_) + 1 + static_cast<int>(h % 999)) % 1000;
        text = std::string(v < 10 ? "00" : v < 100 ? "0" : "") + std::to_string(v);
      } else {
        text = std::string(1, static_cast<char>('A' + (gold_[0] - 'A' + 1 + h % 3) % 4));
      }
    }
    if (d.format == AnswerFormat::kInteger3 && d.split_digits) {
      for (char c : text) out.push_back({std::string(1, c), total / 3.0, 0});
    } else {
      out.push_back({text, total, 0});
    }
    out.push_back({".", -0.3, 0});
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t prompt_hash_;
  std::shared_ptr<const SyntheticProfile> profile_;
  std::string gold_;
};

void reindex(std::vector<TokenEvent>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i].index = i;
}

}  // namespace

// ---------------------------------------------------------------------------

StreamBackend::StreamBackend(std::string delimiter, std::string wait_text)
    : delimiter_(std::move(delimiter)), wait_text_(std::move(wait_text)) {
  if (delimiter_.empty()) throw ArgumentError("offline backend needs a nonempty delimiter");
  if (wait_text_.empty()) throw ArgumentError("offline backend needs a nonempty wait text");
}

CompletionResult StreamBackend::complete(const CompletionRequest& request) {
  validate_request(request);
  requests_.fetch_add(1, std::memory_order_relaxed);

  std::size_t prompt_chars = 0;
  const auto stream = lineage(request, prompt_chars);
  const std::string_view cont = std::string_view(request.context).substr(prompt_chars);

  // Replay the stream over the continuation to recover the model state.
  std::size_t o = 0;
  std::size_t i = 0;
  std::size_t k = 0;
  bool answer_phase = false;
  while (o < cont.size()) {
    if (starts_at(cont, o, delimiter_)) {
      answer_phase = true;
      break;
    }
    const auto att = stream->attempt(k);
    if (att && att->position <= i) {
      if (!starts_at(cont, o, wait_text_)) {
        throw ArgumentError("context diverges from the " + std::string(name()) +
                            " stream at continuation offset " + std::to_string(o) +
                            " (expected wait text or delimiter)");
      }
      o += wait_text_.size();
      ++k;
      continue;
    }
    if (i >= stream->length()) {
      throw ArgumentError("context runs past the end of the " + std::string(name()) + " stream");
    }
    const TokenEvent tok = stream->token(i);
    if (!starts_at(cont, o, tok.text)) {
      throw ArgumentError("context diverges from the " + std::string(name()) +
                          " stream at continuation offset " + std::to_string(o));
    }
    o += tok.text.size();
    ++i;
  }

  CompletionResult result;
  const auto max_tokens = static_cast<std::size_t>(request.max_tokens);
  if (answer_phase) {
    result.tokens = stream->answer(i, k);
    if (truncate_at_stop(result.tokens, request.stop)) {
      result.finish = FinishReason::kStopMatched;
    } else if (result.tokens.size() > max_tokens) {
      result.tokens.resize(max_tokens);
      result.finish = FinishReason::kLength;
    } else {
      result.finish = FinishReason::kEndOfText;
    }
    reindex(result.tokens);
    return result;
  }

  const bool stop_on_delimiter =
      std::find(request.stop.begin(), request.stop.end(), delimiter_) != request.stop.end();
  result.finish = FinishReason::kLength;
  while (true) {
    if (result.tokens.size() == max_tokens) break;
    const auto att = stream->attempt(k);
    if (att && att->position <= i) {
      if (att->kind == FinishReason::kEndOfText || stop_on_delimiter) {
        result.finish = att->kind;
        break;
      }
      result.tokens.push_back({delimiter_, -0.05, 0});
      result.finish = FinishReason::kEndOfText;
      break;
    }
    if (i >= stream->length()) {
      result.finish = FinishReason::kEndOfText;
      break;
    }
    result.tokens.push_back(stream->token(i));
    ++i;
  }
  if (truncate_at_stop(result.tokens, request.stop)) result.finish = FinishReason::kStopMatched;
  reindex(result.tokens);
  return result;
}

// ---------------------------------------------------------------------------

ScriptedBackendSpec parse_scripted_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed script: ") + e.what());
  }
  ScriptedBackendSpec spec;
  try {
    spec.delimiter = doc.value("delimiter", spec.delimiter);
    spec.wait_text = doc.value("wait_text", spec.wait_text);
    for (const auto& jq : doc.at("questions")) {
      ScriptedQuestion q;
      q.prompt = jq.at("prompt").get<std::string>();
      for (const auto& js : jq.value("thinking", json::array())) {
        ScriptSegment seg;
        seg.tokens = parse_tokens(js.at("tokens"));
        seg.finish = parse_finish(js.value("finish", std::string("length")));
        q.thinking.push_back(std::move(seg));
      }
      for (const auto& ja : jq.value("answers", json::array())) {
        ScriptAnswer a;
        a.after_tokens = ja.value("after_tokens", std::size_t{0});
        a.tokens = parse_tokens(ja.at("tokens"));
        q.answers.push_back(std::move(a));
      }
      spec.questions.push_back(std::move(q));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid script: ") + e.what());
  }
  return spec;
}

ScriptedBackendSpec load_scripted_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open script " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scripted_spec(buf.str());
}

ScriptedBackend::ScriptedBackend(ScriptedBackendSpec spec)
    : StreamBackend(spec.delimiter, spec.wait_text) {
  for (const auto& q : spec.questions) {
    if (!streams_.emplace(q.prompt, std::make_shared<ScriptStream>(q, spec.delimiter)).second) {
      throw ValidationError("script lists the prompt twice: " + q.prompt.substr(0, 40));
    }
  }
}

std::shared_ptr<const ThinkingStream> ScriptedBackend::lineage(const CompletionRequest& request,
                                                               std::size_t& prompt_chars) const {
  if (request.prompt_chars > 0) {
    auto it = streams_.find(std::string_view(request.context).substr(0, request.prompt_chars));
    if (it == streams_.end()) throw ArgumentError("prompt is not part of the script");
    prompt_chars = request.prompt_chars;
    return it->second;
  }
  const std::shared_ptr<const ThinkingStream>* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [prompt, stream] : streams_) {
    if (prompt.size() >= best_len && request.context.starts_with(prompt)) {
      best = &stream;
      best_len = prompt.size();
    }
  }
  if (!best) throw ArgumentError("context does not start with any scripted prompt");
  prompt_chars = best_len;
  return *best;
}

// ---------------------------------------------------------------------------

SyntheticProfile parse_synthetic_profile(std::string_view json_text) {
  SyntheticProfile p;
  json doc;
  try {
    doc = json_text.empty() ? json::object() : json::parse(json_text);
    p.end_attempts = doc.value("end_attempts", p.end_attempts);
    p.repeat_every = doc.value("repeat_every", p.repeat_every);
    p.end_of_text_fraction = doc.value("end_of_text_fraction", p.end_of_text_fraction);
    if (doc.contains("answer")) {
      const auto& a = doc["answer"];
      auto& d = p.answer;
      if (a.contains("format")) d.format = parse_answer_format(a["format"].get<std::string>());
      d.prefix = a.value("prefix", d.prefix);
      d.split_digits = a.value("split_digits", d.split_digits);
      d.fixed_answer = a.value("fixed_answer", d.fixed_answer);
      d.fixed_logprobs = a.value("fixed_logprobs", d.fixed_logprobs);
      d.horizon = a.value("horizon", d.horizon);
      d.p_correct_start = a.value("p_correct_start", d.p_correct_start);
      d.p_correct_end = a.value("p_correct_end", d.p_correct_end);
      d.confidence_correct_start = a.value("confidence_correct_start", d.confidence_correct_start);
      d.confidence_correct_end = a.value("confidence_correct_end", d.confidence_correct_end);
      d.confidence_incorrect_start =
          a.value("confidence_incorrect_start", d.confidence_incorrect_start);
      d.confidence_incorrect_end = a.value("confidence_incorrect_end", d.confidence_incorrect_end);
      d.spread = a.value("spread", d.spread);
      d.parse_fail_rate = a.value("parse_fail_rate", d.parse_fail_rate);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid synthetic profile: ") + e.what());
  }
  if (!std::is_sorted(p.end_attempts.begin(), p.end_attempts.end())) {
    throw ArgumentError("synthetic end_attempts must be non-decreasing");
  }
  return p;
}

SyntheticBackend::SyntheticBackend(std::uint64_t seed, SyntheticProfile profile,
                                   std::string delimiter, std::string wait_text)
    : StreamBackend(std::move(delimiter), std::move(wait_text)), seed_(seed) {
  if (!std::is_sorted(profile.end_attempts.begin(), profile.end_attempts.end())) {
    throw ArgumentError("synthetic end_attempts must be non-decreasing");
  }
  const auto& d = profile.answer;
  if (!d.fixed_answer.empty() && d.fixed_logprobs.size() != d.fixed_answer.size()) {
    throw ArgumentError("fixed_logprobs needs one value per fixed_answer character");
  }
  for (double lp : d.fixed_logprobs) {
    if (!(lp <= 0.0)) throw ArgumentError("fixed_logprobs must be <= 0");
  }
  profile_ = std::make_shared<const SyntheticProfile>(std::move(profile));
}

std::shared_ptr<const ThinkingStream> SyntheticBackend::lineage(const CompletionRequest& request,
                                                                std::size_t& prompt_chars) const {
  if (request.prompt_chars == 0) {
    throw ArgumentError("synthetic backend requires prompt_chars to locate the prompt");
  }
  prompt_chars = request.prompt_chars;
  return std::make_shared<SyntheticStream>(
      seed_, std::string_view(request.context).substr(0, prompt_chars), profile_);
}

}  // namespace abstain
