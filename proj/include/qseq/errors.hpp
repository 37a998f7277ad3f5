// Copyright 2026 The qseq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qseq {

// Every error the library raises derives from qseq::Error. The CLI maps the
// three families below onto exit codes (usage/config = 1, data = 2, numeric = 3).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration or argument values (qubit bounds, unbound parameters,
/// malformed config files).
struct ConfigError : Error {
    using Error::Error;
};

struct IndexError : ConfigError {
    using ConfigError::ConfigError;
};

struct DimensionError : ConfigError {
    using ConfigError::ConfigError;
};

struct ArgumentError : ConfigError {
    using ConfigError::ConfigError;
};

struct UnsupportedGateError : ConfigError {
    using ConfigError::ConfigError;
};

/// Feature values outside the domain an encoder accepts.
struct DomainError : ConfigError {
    using ConfigError::ConfigError;
};

/// Unreadable, truncated or malformed dataset / checkpoint files.
struct DataError : Error {
    using Error::Error;
};

/// NaN/Inf losses or gradients.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace qseq
