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

#ifndef C4_GAME_H_
#define C4_GAME_H_

#include <Eigen/Dense>

#include "c4/env.h"
#include "json.hpp"

namespace c4 {

// Production frequencies are kept at or above this floor; the allocation
// ratio is undefined when every creator produces zero.
inline constexpr double kMinProduction = 1e-8;

enum class BetaMode { kPersonalized, kHomogeneous };

const char* BetaModeName(BetaMode mode);
BetaMode ParseBetaMode(const std::string& name);

// Per-user exploration strengths. In homogeneous mode every entry is equal.
struct BetaPolicy {
  Eigen::VectorXd beta;
  BetaMode mode = BetaMode::kPersonalized;

  static BetaPolicy Homogeneous(double value, int num_users);
  static BetaPolicy Personalized(Eigen::VectorXd beta);

  void Validate(int num_users) const;
};

struct StrategyProfile {
  Eigen::VectorXd x;

  static StrategyProfile Constant(int num_creators, double value);
};

// P(i, j): probability that user j is matched with creator i. Columns sum
// to one.
struct MatchMatrix {
  Eigen::MatrixXd p;
};

struct WelfareReport {
  Eigen::VectorXd pi;  // per-user expected relevance
  Eigen::VectorXd x;
  double total_satisfaction = 0.0;  // U
  double total_volume = 0.0;        // V
  double lambda = 0.0;
  double welfare = 0.0;  // U + lambda * V
};

nlohmann::json WelfareReportToJson(const WelfareReport& report);

// Throws ValidationError unless x has n finite entries > 0.
void ValidateStrategy(const Environment& env, const StrategyProfile& x);

// x_i e^{beta_j w_ij} / sum_k x_k e^{beta_j w_kj}, evaluated per column in
// log space so that beta_j * w_ij never overflows.
MatchMatrix MatchProbabilities(const Environment& env,
                               const StrategyProfile& x,
                               const BetaPolicy& beta);

// u_i = sum_j P_ij - c_i(x_i).
Eigen::VectorXd CreatorUtilities(const Environment& env,
                                 const StrategyProfile& x,
                                 const BetaPolicy& beta);

// du_i/dx_i = sum_j P_ij (1 - P_ij) / x_i - c_i'(x_i). Zero at an interior
// equilibrium.
Eigen::VectorXd UtilityGradient(const Environment& env,
                                const StrategyProfile& x,
                                const BetaPolicy& beta);

WelfareReport Welfare(const Environment& env, const StrategyProfile& x,
                      const BetaPolicy& beta, double lambda);

// Same as Welfare() but from an already computed match matrix.
WelfareReport WelfareFromMatch(const Environment& env,
                               const StrategyProfile& x,
                               const MatchMatrix& match, double lambda);

// Evaluates the game repeatedly at a fixed (env, beta). The factors
// e^{beta_j w_ij} are computed once, shifted per user so the largest is one;
// this makes each gradient evaluation two passes over an n-by-m array with no
// transcendental calls. Inputs are not revalidated.
class AllocationKernel {
 public:
  AllocationKernel(const Environment& env, const BetaPolicy& beta);

  int num_creators() const { return static_cast<int>(weights_.rows()); }
  int num_users() const { return static_cast<int>(weights_.cols()); }

  Eigen::MatrixXd Probabilities(const Eigen::VectorXd& x) const;
  // The utility gradient F(x). When `curvature` is non-null it also receives
  // -dF_i/dx_i, which is positive for every creator.
  Eigen::VectorXd UtilityGradient(const Eigen::VectorXd& x,
                                  Eigen::VectorXd* curvature = nullptr) const;

 private:
  Eigen::MatrixXd weights_;
  Eigen::ArrayXd cost_coefficient_;
  Eigen::ArrayXd cost_exponent_;
};

}  // namespace c4

#endif  // C4_GAME_H_
