// Copyright 2026 The prefbed Authors.
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

#ifndef PREFBED_COMMON_HPP_
#define PREFBED_COMMON_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace prefbed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Caller broke a documented precondition (dimension mismatch, bad range, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

// Linear algebra gave up (factorization failed at maximum jitter, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Model fitting failed after all recovery attempts.
class FittingError : public std::runtime_error {
 public:
  explicit FittingError(const std::string& what) : std::runtime_error(what) {}
};

// A comparison backend could not produce a verdict.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace prefbed

#endif  // PREFBED_COMMON_HPP_
