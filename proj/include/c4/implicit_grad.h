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

#ifndef C4_IMPLICIT_GRAD_H_
#define C4_IMPLICIT_GRAD_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "c4/env.h"
#include "c4/game.h"

namespace c4 {

// Blocks of the implicit-function system at an equilibrium x*:
//   -dF/dx = diag(d) + y z^T,   dF/dbeta = b,
// so dx*/dbeta = (diag(d) + y z^T)^{-1} b.
struct PnePartials {
  Eigen::VectorXd d;  // c_i'' + sum_j P_ij^2 / x_i^2
  Eigen::MatrixXd y;  // P_ij (1 - 2 P_ij) / x_i
  Eigen::MatrixXd z;  // P_ij / x_i
  Eigen::MatrixXd b;  // y_ij (w_ij - sum_k w_kj P_kj)
  Eigen::VectorXd cost_curvature;  // c_i'', the part of d no user owns
};

// Evaluates the blocks at (x_star, beta). Throws NumericalError if the
// first-order residual at x_star is not below `residual_tolerance`.
PnePartials ComputePnePartials(const Environment& env,
                               const StrategyProfile& x_star,
                               const BetaPolicy& beta,
                               double residual_tolerance = 1e-2);

// Reference path: dense LU solve of (diag(d) + y z^T) X = b. Throws
// NumericalError when the reciprocal condition estimate is below 1e-12.
Eigen::MatrixXd JacobianExact(const PnePartials& partials);

struct SketchSpec {
  double rate = 1.0;
  std::uint64_t seed = 0;
  // Also rebuild the user sum inside d from the sampled columns. Each user
  // contributes diag(z_j^2) + y_j z_j^T to -dF/dx, and that block has a
  // positive semidefinite symmetric part, so resampling all of it keeps the
  // sketched system as well posed as the exact one. With this off only y and
  // z are resampled and the system can come arbitrarily close to singular.
  bool resample_diagonal = true;

  void Validate() const;
  int SampleSize(int num_users) const;
};

// Column-resampled y and z. `support` lists the ceil(rate * m) sampled users
// in increasing order; column j of the sketch is column column_map[j] of the
// original, with column_map[j] drawn uniformly from `support`. At rate 1 the
// map is the identity. `d` is the diagonal to pair with the sketch.
struct Sketch {
  Eigen::VectorXd d;
  Eigen::MatrixXd y;
  Eigen::MatrixXd z;
  std::vector<int> support;
  std::vector<int> column_map;
};

Sketch SketchMatrices(const PnePartials& partials, const SketchSpec& spec);

// left * right^T == y z^T, with one column per distinct sampled user, so the
// rank is at most the sample size.
struct LowRankUpdate {
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};

LowRankUpdate CompactUpdate(const PnePartials& partials);
LowRankUpdate CompactUpdate(const PnePartials& partials, const Sketch& sketch);

// (diag(d) + left right^T)^{-1} rhs by the Woodbury identity; the only dense
// solve is the r-by-r inner system I + right^T diag(d)^{-1} left, which gets
// 1e-12 added to its diagonal. Throws NumericalError if that system is
// singular.
Eigen::MatrixXd SmwApply(const Eigen::VectorXd& d, const LowRankUpdate& update,
                         const Eigen::MatrixXd& rhs);
Eigen::MatrixXd SmwApply(const PnePartials& partials,
                         const Eigen::MatrixXd& rhs);
Eigen::MatrixXd SmwApply(const PnePartials& partials, const Sketch& sketch,
                         const Eigen::MatrixXd& rhs);

// Direct partial derivatives of U at fixed x.
struct SatisfactionPartials {
  Eigen::VectorXd du_dx;     // sum_j (P_ij / x_i)(w_ij - T_j)
  Eigen::VectorXd du_dbeta;  // sum_i w_ij^2 P_ij - T_j^2, never negative
};

SatisfactionPartials ComputeSatisfactionPartials(const Environment& env,
                                                 const StrategyProfile& x,
                                                 const BetaPolicy& beta);

// dW/dbeta = (dU/dx + lambda 1)^T dx*/dbeta + dU/dbeta, with dx*/dbeta
// applied through the Woodbury identity on the sketched update.
Eigen::VectorXd WelfareGradient(const Environment& env,
                                const StrategyProfile& x_star,
                                const BetaPolicy& beta, double lambda,
                                const SketchSpec& spec,
                                double residual_tolerance = 1e-2);

// Same quantity through JacobianExact; O(n^3), for cross-checking.
Eigen::VectorXd WelfareGradientDense(const Environment& env,
                                     const StrategyProfile& x_star,
                                     const BetaPolicy& beta, double lambda,
                                     double residual_tolerance = 1e-2);

}  // namespace c4

#endif  // C4_IMPLICIT_GRAD_H_
