// Copyright 2026 The Chiron Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHIRON_ERROR_HPP_
#define CHIRON_ERROR_HPP_

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chiron {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown policy, unknown question, bad template.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (JSONL line, missing field).
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Transport failure or replay miss. Carries the request key.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string request_key)
      : Error(what + " [request " + request_key + "]"),
        message_(what),
        request_key_(std::move(request_key)) {}

  const std::string& message() const { return message_; }
  const std::string& request_key() const { return request_key_; }

 private:
  std::string message_;
  std::string request_key_;
};

// Server answered, but not in the expected shape.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Option scoring could not produce a distribution.
class ScoringError : public Error {
 public:
  using Error::Error;
};

// Statistic is undefined for the given data.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

// Receives non-fatal diagnostics. An empty sink drops them.
using WarningSink = std::function<void(std::string_view)>;

inline void warn(const WarningSink& sink, std::string_view message) {
  if (sink) sink(message);
}

}  // namespace chiron

#endif  // CHIRON_ERROR_HPP_
