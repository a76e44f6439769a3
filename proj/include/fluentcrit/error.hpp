// Copyright (c) 2026 The fluentcrit Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluentcrit {

enum class ErrorKind {
  EmptyInput,
  ConfigMismatch,
  FormatError,
  ParseError,
  DegenerateAlignment,
  IndexError,
  NoWords,
  MissingNeighbor,
  ShapeError,
  EmptyRegion,
  ZeroVector,
  BatchTooSmall,
  BadTemperature,
  EmptyContext,
  PlanMismatch,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ConfigMismatch: return "ConfigMismatch";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DegenerateAlignment: return "DegenerateAlignment";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::NoWords: return "NoWords";
    case ErrorKind::MissingNeighbor: return "MissingNeighbor";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::BadTemperature: return "BadTemperature";
    case ErrorKind::EmptyContext: return "EmptyContext";
    case ErrorKind::PlanMismatch: return "PlanMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every validation failure raised by the library. Callers that need to
/// distinguish failures switch on kind(); the CLI maps any Error to exit 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Binary decoding failure; offset is the byte position of the offending field.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::FormatError,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Text parsing failure; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::ParseError,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fluentcrit
