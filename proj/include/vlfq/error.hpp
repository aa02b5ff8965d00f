// Copyright 2026 The vlfq Authors
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

namespace vlfq {

enum class ErrorKind {
  // input problems
  NotSquare,
  NotHermitian,
  NotPSD,
  NotDensityMatrix,
  DimensionMismatch,
  DimensionTooLarge,
  InvalidEnsemble,
  BadShape,
  ParseError,
  IoError,
  EmptyInput,
  // decomposition
  ClosureDiverged,
  DegenerateSample,
  NonProductResidual,
  NotCommuting,
  DecompositionFailed,
  // codec
  MissingCodeword,
  UnparseableCodeword,
  PayloadLeakage,
  // internal consistency
  WindowViolation,
  InconsistentBound,
  InternalConsistency,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotDensityMatrix: return "NotDensityMatrix";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::InvalidEnsemble: return "InvalidEnsemble";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ClosureDiverged: return "ClosureDiverged";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::NonProductResidual: return "NonProductResidual";
    case ErrorKind::NotCommuting: return "NotCommuting";
    case ErrorKind::DecompositionFailed: return "DecompositionFailed";
    case ErrorKind::MissingCodeword: return "MissingCodeword";
    case ErrorKind::UnparseableCodeword: return "UnparseableCodeword";
    case ErrorKind::PayloadLeakage: return "PayloadLeakage";
    case ErrorKind::WindowViolation: return "WindowViolation";
    case ErrorKind::InconsistentBound: return "InconsistentBound";
    case ErrorKind::InternalConsistency: return "InternalConsistency";
  }
  return "Unknown";
}

/// Process exit code associated with an error kind: 1 for bad input,
/// 2 for a decomposition that could not be verified, 3 for a violated
/// internal assertion.
constexpr int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ClosureDiverged:
    case ErrorKind::DegenerateSample:
    case ErrorKind::NonProductResidual:
    case ErrorKind::DecompositionFailed:
      return 2;
    case ErrorKind::WindowViolation:
    case ErrorKind::InconsistentBound:
    case ErrorKind::InternalConsistency:
    case ErrorKind::PayloadLeakage:
      return 3;
    default:
      return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vlfq
