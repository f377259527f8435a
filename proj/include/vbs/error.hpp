// Copyright 2026 The vbsprep Authors
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

namespace vbs {

/// Bad input: out-of-range qubit, wrong parameter count, non-finite angle.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state that violates an operation's precondition (unnormalized,
/// weight outside the expected subspace).
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Post-selection or normalization left nothing to work with.
class EmptyResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal numerical failure (should not happen for valid inputs).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Readout calibration that cannot be inverted.
class IllConditionedCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vbs
