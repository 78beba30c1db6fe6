// Copyright 2026 The qpovm Authors
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

namespace qpovm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operators of mismatched or non-square shape.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A POVM, state, unitary or confusion matrix violates its mathematical
/// constraints. The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InformationalIncompletenessError : public Error {
 public:
  using Error::Error;
};

class NotRankOneError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive algorithms refuse inputs past a configured size.
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace qpovm
