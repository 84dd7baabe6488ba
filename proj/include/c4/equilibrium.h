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

#ifndef C4_EQUILIBRIUM_H_
#define C4_EQUILIBRIUM_H_

#include <optional>

#include <Eigen/Dense>

#include "c4/env.h"
#include "c4/game.h"
#include "json.hpp"

namespace c4 {

struct SolverConfig {
  int max_iter = 10000;
  double step = 0.1;
  double tolerance = 1e-2;
  // Empty means all ones.
  Eigen::VectorXd initial;
  double floor = kMinProduction;

  void Validate(int num_creators) const;
};

struct SolveResult {
  StrategyProfile x_star;
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  // Step size actually used; smaller than the configured one if the
  // iteration had to be restarted after diverging.
  double step_used = 0.0;
};

nlohmann::json SolveResultToJson(const SolveResult& result);

// Projected gradient play: every creator simultaneously moves along its own
// utility gradient, x_i <- max(floor, x_i + s_i * grad_i), until the stacked
// gradient has l2 norm below the tolerance or max_iter updates were made.
// s_i is the configured step, capped at 1 / (-dF_i/dx_i) for creators whose
// own-strategy curvature is large (those near the floor under rho > 1). A
// warm start, when given, replaces the configured initial point.
//
// If the gradient norm blows up (non-finite or above 1e6) the run restarts
// with half the step; NumericalError after repeated failures.
SolveResult SolvePne(const Environment& env, const BetaPolicy& beta,
                     const SolverConfig& config,
                     const std::optional<StrategyProfile>& warm_start =
                         std::nullopt);

// l2 norm of the first-order condition map at x.
double Residual(const Environment& env, const BetaPolicy& beta,
                const StrategyProfile& x);

struct DscCertificate {
  // -H(x; 1): symmetrized negative Jacobian of the first-order map.
  Eigen::MatrixXd matrix;
  double min_eigenvalue = 0.0;
};

inline constexpr int kDscMaxCreators = 64;

// Assembles sum_j g_j^{-3} a_j H_j a_j^T + diag(c_i'') and its smallest
// eigenvalue. A positive value certifies diagonal strict concavity at x.
DscCertificate DscHessian(const Environment& env, const BetaPolicy& beta,
                          const StrategyProfile& x,
                          int max_creators = kDscMaxCreators);

}  // namespace c4

#endif  // C4_EQUILIBRIUM_H_
