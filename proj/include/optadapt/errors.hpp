// Copyright 2026 The optadapt Authors.
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

#ifndef OPTADAPT_ERRORS_HPP_
#define OPTADAPT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace optadapt {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input document (unknown field, wrong type, bad schema id).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

// Structurally valid input that violates a domain invariant
// (non-unit axis, min >= max, start outside limits, ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// Mismatched vector/matrix dimensions passed across an API boundary.
class DimensionError : public ValidationError {
 public:
  explicit DimensionError(const std::string& what) : ValidationError(what) {}
};

// Inverse kinematics could not reach the requested goal position.
class UnreachableGoalError : public Error {
 public:
  explicit UnreachableGoalError(const std::string& what) : Error(what) {}
};

// A solver (path estimator or plan refinement) diverged. Maps to a
// distinct process exit code in the CLI.
class SolverDivergenceError : public Error {
 public:
  explicit SolverDivergenceError(const std::string& what) : Error(what) {}
};

}  // namespace optadapt

#endif  // OPTADAPT_ERRORS_HPP_
