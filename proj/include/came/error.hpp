// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace came {

/// Base of every error raised by the library. The C API maps each subclass
/// onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a structural constraint (dims, labels).
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during optimization. Carries the global step.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long long step)
      : Error(what), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

/// A scalar function evaluation returned NaN/Inf during finite differencing.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t coordinate)
      : Error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

}  // namespace came
