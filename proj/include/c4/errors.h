// Copyright 2026 The C4 Toolkit Authors
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

#ifndef C4_ERRORS_H_
#define C4_ERRORS_H_

#include <stdexcept>
#include <string>

namespace c4 {

// Bad input: a violated invariant on a type, a malformed file, an argument
// outside its domain. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Well-formed input on which the numerics fail: divergence, singular systems,
// non-convergence where convergence is required. The CLI maps this to exit
// code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace c4

#endif  // C4_ERRORS_H_
