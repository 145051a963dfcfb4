/* Copyright 2026 The EcoAttn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef ECOATTN_ERRORS_HPP_
#define ECOATTN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ecoattn {

// Operand shapes disagree (e.g. matmul inner dimensions).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A scalar parameter is outside its admissible range (p < 1, negative lambda,
// finite-difference step out of bounds, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A compound spec is inconsistent (head divisibility, window sizes, masks
// with fully blocked rows, infeasible task parameters).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerically degenerate input: empty matrix, zero row fed to a normalizer,
// an energy model with zero total cost.
struct NumericError : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed matrix fixture file.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A finite-difference probe evaluated the objective to a non-finite value.
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training loss became non-finite; carries the offending epoch (1-based).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace ecoattn

#endif  // ECOATTN_ERRORS_HPP_
