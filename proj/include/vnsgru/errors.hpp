// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace vnsgru {

/// Error taxonomy shared across the library. The CLI maps these onto
/// distinct process exit codes.
class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace vnsgru
