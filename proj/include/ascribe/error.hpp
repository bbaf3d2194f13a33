// Copyright 2026 The Ascribe Authors.
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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ascribe {

enum class ErrorCode {
  UnknownFormat,
  SyntaxError,
  IndexError,
  TruncatedFile,
  DimensionMismatch,
  EmptyStack,
  UnsupportedPixelFormat,
  IndexOutOfRange,
  ParameterOutOfRange,
  DegenerateVolume,
  UnknownLabel,
  UnknownObject,
  AlreadyGrabbed,
  StaleGrab,
  DegenerateGesture,
  MalformedMessage,
  UnknownKind,
  RootNotFound,
  AssetNotFound,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::UnsupportedPixelFormat: return "UnsupportedPixelFormat";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::DegenerateVolume: return "DegenerateVolume";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::AlreadyGrabbed: return "AlreadyGrabbed";
    case ErrorCode::StaleGrab: return "StaleGrab";
    case ErrorCode::DegenerateGesture: return "DegenerateGesture";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::RootNotFound: return "RootNotFound";
    case ErrorCode::AssetNotFound: return "AssetNotFound";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `line` is set for text-format parse
/// errors and is 1-based.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(code, detail, line)), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string format(ErrorCode code, const std::string& detail,
                            std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " at line " + std::to_string(*line);
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace ascribe
