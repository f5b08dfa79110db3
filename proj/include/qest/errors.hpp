// Copyright 2026 The qest Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qest {

/// Failure categories raised by the library. The CLI maps each kind to an
/// exit code (see `exit_code`).
enum class ErrorKind {
    invalid_dimension,
    dimension_mismatch,
    contract_violation,
    ambiguity,
    invalid_argument,
    singular_design,
    unsupported,
    invalid_basis,
    degenerate_data,
    config,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::contract_violation: return "contract-violation";
    case ErrorKind::ambiguity: return "ambiguity";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::singular_design: return "singular-design";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::invalid_basis: return "invalid-basis";
    case ErrorKind::degenerate_data: return "degenerate-data";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

/// 2 for configuration/usage problems, 3 for numerical contract violations.
constexpr int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_dimension:
    case ErrorKind::unsupported:
    case ErrorKind::io:
        return 2;
    default:
        return 3;
    }
}

} // namespace qest
