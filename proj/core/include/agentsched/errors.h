/* Copyright 2026 The agentsched Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace agentsched {

// Invalid configuration: bad probabilities, malformed profiles, unknown keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that violates a model invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside a function's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Event sequence that the policy contract forbids (e.g. duplicate arrival).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Simulation could not make progress; message carries a state dump.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds the size an exhaustive search accepts.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace agentsched
