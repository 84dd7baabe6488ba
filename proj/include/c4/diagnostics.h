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

#ifndef C4_DIAGNOSTICS_H_
#define C4_DIAGNOSTICS_H_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "c4/env.h"

namespace c4 {

// Small instance with w ~ U[0,1] and cost coefficients ~ U[0.1,0.5].
Environment RandomEnvironment(int num_creators, int num_users,
                              double cost_exponent, std::uint64_t seed);

// Largest |actual - expected| / |expected| over entries whose |expected|
// exceeds `min_magnitude`.
double MaxRelativeError(const Eigen::MatrixXd& actual,
                        const Eigen::MatrixXd& expected,
                        double min_magnitude = 1e-8);

// ||actual - expected||_inf / ||expected||_inf.
double RelativeErrorInf(const Eigen::VectorXd& actual,
                        const Eigen::VectorXd& expected);

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  std::set<std::string> skip;
  // "du-dbeta-sign" flips dU/dbeta inside the welfare gradient under test.
  std::string inject_fault;
};

// gradient, jacobian, smw, dsc.
const std::vector<std::string>& CheckNames();

std::vector<CheckResult> RunChecks(const CheckOptions& options);

}  // namespace c4

#endif  // C4_DIAGNOSTICS_H_
