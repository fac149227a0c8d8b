// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace asap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A configuration value is outside its admissible range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pruning schedule does not cover the model's layers.
class ScheduleError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A computation has no well-defined result (e.g. a fully masked softmax row).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input. `offset()` is the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), m_offset(offset) {}

    std::uint64_t offset() const noexcept { return m_offset; }

private:
    std::uint64_t m_offset;
};

}  // namespace asap
