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

#include "c4/game.h"

#include <cmath>
#include <string>

#include "c4/errors.h"

namespace c4 {

const char* BetaModeName(BetaMode mode) {
  return mode == BetaMode::kHomogeneous ? "homogeneous" : "personalized";
}

BetaMode ParseBetaMode(const std::string& name) {
  if (name == "personalized") return BetaMode::kPersonalized;
  if (name == "homogeneous") return BetaMode::kHomogeneous;
  throw ValidationError("unknown beta mode '" + name +
                        "' (expected personalized or homogeneous)");
}

BetaPolicy BetaPolicy::Homogeneous(double value, int num_users) {
  return {Eigen::VectorXd::Constant(num_users, value), BetaMode::kHomogeneous};
}

BetaPolicy BetaPolicy::Personalized(Eigen::VectorXd beta) {
  return {std::move(beta), BetaMode::kPersonalized};
}

void BetaPolicy::Validate(int num_users) const {
  Require(beta.size() == num_users,
          "beta must have m = " + std::to_string(num_users) + " entries, got " +
              std::to_string(beta.size()));
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    Require(std::isfinite(beta[j]), "beta entries must be finite");
    Require(beta[j] >= 0.0, "beta entries must be >= 0");
  }
  if (mode == BetaMode::kHomogeneous && beta.size() > 0) {
    Require((beta.array() == beta[0]).all(),
            "homogeneous beta must have all entries equal");
  }
}

StrategyProfile StrategyProfile::Constant(int num_creators, double value) {
  return {Eigen::VectorXd::Constant(num_creators, value)};
}

nlohmann::json WelfareReportToJson(const WelfareReport& report) {
  return {{"U", report.total_satisfaction},
          {"V", report.total_volume},
          {"lambda", report.lambda},
          {"W", report.welfare},
          {"pi", std::vector<double>(report.pi.begin(), report.pi.end())},
          {"x", std::vector<double>(report.x.begin(), report.x.end())}};
}

void ValidateStrategy(const Environment& env, const StrategyProfile& x) {
  Require(x.x.size() == env.num_creators(),
          "strategy must have n = " + std::to_string(env.num_creators()) +
              " entries, got " + std::to_string(x.x.size()));
  for (Eigen::Index i = 0; i < x.x.size(); ++i) {
    Require(std::isfinite(x.x[i]), "strategy entries must be finite");
    Require(x.x[i] > 0.0, "strategy entries must be > 0");
  }
}

namespace {

void ValidateInputs(const Environment& env, const StrategyProfile& x,
                    const BetaPolicy& beta) {
  ValidateStrategy(env, x);
  beta.Validate(env.num_users());
}

}  // namespace

MatchMatrix MatchProbabilities(const Environment& env,
                               const StrategyProfile& x,
                               const BetaPolicy& beta) {
  ValidateInputs(env, x, beta);
  const Eigen::ArrayXd log_x = x.x.array().log();
  MatchMatrix out{Eigen::MatrixXd(env.num_creators(), env.num_users())};
  for (int j = 0; j < env.num_users(); ++j) {
    Eigen::ArrayXd score = beta.beta[j] * env.relevance.col(j).array() + log_x;
    score = (score - score.maxCoeff()).exp();
    out.p.col(j) = score / score.sum();
  }
  return out;
}

Eigen::VectorXd CreatorUtilities(const Environment& env,
                                 const StrategyProfile& x,
                                 const BetaPolicy& beta) {
  const MatchMatrix match = MatchProbabilities(env, x, beta);
  Eigen::VectorXd u = match.p.rowwise().sum();
  for (int i = 0; i < env.num_creators(); ++i) {
    u[i] -= env.costs[i].Value(x.x[i]);
  }
  return u;
}

Eigen::VectorXd UtilityGradient(const Environment& env,
                                const StrategyProfile& x,
                                const BetaPolicy& beta) {
  const MatchMatrix match = MatchProbabilities(env, x, beta);
  const auto p = match.p.array();
  Eigen::VectorXd grad = (p * (1.0 - p)).rowwise().sum().matrix();
  for (int i = 0; i < env.num_creators(); ++i) {
    grad[i] = grad[i] / x.x[i] - env.costs[i].FirstDerivative(x.x[i]);
  }
  return grad;
}

WelfareReport WelfareFromMatch(const Environment& env,
                               const StrategyProfile& x,
                               const MatchMatrix& match, double lambda) {
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  WelfareReport report;
  report.pi = (env.relevance.array() * match.p.array()).colwise().sum();
  report.x = x.x;
  report.total_satisfaction = report.pi.sum();
  report.total_volume = x.x.sum();
  report.lambda = lambda;
  report.welfare = report.total_satisfaction + lambda * report.total_volume;
  return report;
}

WelfareReport Welfare(const Environment& env, const StrategyProfile& x,
                      const BetaPolicy& beta, double lambda) {
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  return WelfareFromMatch(env, x, MatchProbabilities(env, x, beta), lambda);
}

AllocationKernel::AllocationKernel(const Environment& env,
                                   const BetaPolicy& beta)
    : weights_(env.num_creators(), env.num_users()),
      cost_coefficient_(env.num_creators()),
      cost_exponent_(env.num_creators()) {
  beta.Validate(env.num_users());
  for (int j = 0; j < env.num_users(); ++j) {
    Eigen::ArrayXd score = beta.beta[j] * env.relevance.col(j).array();
    weights_.col(j) = (score - score.maxCoeff()).exp().matrix();
  }
  for (int i = 0; i < env.num_creators(); ++i) {
    cost_coefficient_[i] = env.costs[i].coefficient;
    cost_exponent_[i] = env.costs[i].exponent;
  }
}

Eigen::MatrixXd AllocationKernel::Probabilities(
    const Eigen::VectorXd& x) const {
  Eigen::MatrixXd p = x.asDiagonal() * weights_;
  const Eigen::RowVectorXd column_total = p.colwise().sum();
  return p * column_total.cwiseInverse().asDiagonal();
}

Eigen::VectorXd AllocationKernel::UtilityGradient(
    const Eigen::VectorXd& x, Eigen::VectorXd* curvature) const {
  // With q_ij = a_ij / g_j = P_ij / x_i the gradient is
  // sum_j q_ij - x_i sum_j q_ij^2 - c_i'(x_i), and its own-coordinate
  // derivative is -(c_i'' + 2 sum_j q_ij^2 - 2 x_i sum_j q_ij^3).
  const Eigen::Index n = weights_.rows();
  Eigen::ArrayXd first = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd second = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd third = Eigen::ArrayXd::Zero(curvature ? n : 0);
  for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
    const auto a = weights_.col(j).array();
    const double inv_total = 1.0 / weights_.col(j).dot(x);
    const Eigen::ArrayXd q = a * inv_total;
    first += q;
    second += q.square();
    if (curvature) third += q.cube();
  }
  const Eigen::ArrayXd xa = x.array();
  Eigen::ArrayXd marginal_cost(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rho = cost_exponent_[i];
    marginal_cost[i] = rho == 1.0 ? cost_coefficient_[i]
                                  : cost_coefficient_[i] * rho *
                                        std::pow(xa[i], rho - 1.0);
  }
  if (curvature) {
    curvature->resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rho = cost_exponent_[i];
      const double cost_curvature =
          rho == 1.0 ? 0.0
                     : cost_coefficient_[i] * rho * (rho - 1.0) *
                           std::pow(xa[i], rho - 2.0);
      (*curvature)[i] =
          cost_curvature + 2.0 * second[i] - 2.0 * xa[i] * third[i];
    }
  }
  return (first - xa * second - marginal_cost).matrix();
}

}  // namespace c4
