// Copyright 2026 The MaskZO Authors.
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

#ifndef MASKZO_ERRORS_H_
#define MASKZO_ERRORS_H_

#include <stdexcept>
#include <string>

namespace maskzo {

// Base of every error thrown by the library. `kind()` is a stable,
// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// A caller broke a documented precondition (shape mismatch, bad range, ...).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message)
      : Error("contract", message) {}
};

class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& message)
      : Error("degenerate_fit", message) {}
};

class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(const std::string& message)
      : Error("singular", message) {}
};

class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& message)
      : Error("non_finite", message) {}
};

// Raised by the training loop when the aggregate loss blows past the guard.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& message)
      : Error("divergence", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace maskzo

#endif  // MASKZO_ERRORS_H_
