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

#ifndef ABSTAIN_ERRORS_HPP_
#define ABSTAIN_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace abstain {

// Numeric values are shared with the C API status codes.
enum class ErrorCode : int {
  kArgument = 1,
  kParse = 2,
  kValidation = 3,
  kIo = 4,
  kTransport = 5,
  kHttp = 6,
  kCapability = 7,
  kCompleteness = 8,
  kLookup = 9,
  kDegenerateFit = 10,
  kRunFailed = 11,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

  // Same code, message prefixed with `context`.
  Error with_context(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + what());
  }

 private:
  ErrorCode code_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& m) : Error(ErrorCode::kArgument, m) {}
};

// Malformed input text; `line` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t line = 0)
      : Error(ErrorCode::kParse, m), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error(ErrorCode::kValidation, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::kIo, m) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& m) : Error(ErrorCode::kTransport, m) {}
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& m)
      : Error(ErrorCode::kHttp, m), status_(status) {}
  int status() const { return status_; }
  bool retryable() const { return status_ == 429 || status_ >= 500; }

 private:
  int status_;
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& m) : Error(ErrorCode::kCapability, m) {}
};

class CompletenessError : public Error {
 public:
  CompletenessError(const std::string& m,
                    std::vector<std::pair<std::string, int>> missing)
      : Error(ErrorCode::kCompleteness, m), missing_(std::move(missing)) {}
  // (question id, budget) pairs absent from the record set.
  const std::vector<std::pair<std::string, int>>& missing() const { return missing_; }

 private:
  std::vector<std::pair<std::string, int>> missing_;
};

class LookupError : public Error {
 public:
  LookupError(const std::string& m, std::vector<double> nearest)
      : Error(ErrorCode::kLookup, m), nearest_(std::move(nearest)) {}
  const std::vector<double>& nearest() const { return nearest_; }

 private:
  std::vector<double> nearest_;
};

class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& m)
      : Error(ErrorCode::kDegenerateFit, m) {}
};

// Every attempted question failed; `cause` is the most frequent failure kind.
class RunFailedError : public Error {
 public:
  RunFailedError(ErrorCode cause, const std::string& m)
      : Error(ErrorCode::kRunFailed, m), cause_(cause) {}
  ErrorCode cause() const { return cause_; }

 private:
  ErrorCode cause_;
};

}  // namespace abstain

#endif  // ABSTAIN_ERRORS_HPP_
