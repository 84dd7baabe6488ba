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

#include "c4/equilibrium.h"

#include <cmath>
#include <string>
#include <vector>

#include "c4/errors.h"

namespace c4 {
namespace {

constexpr double kDivergenceNorm = 1e6;
constexpr int kMaxStepHalvings = 30;

}  // namespace

void SolverConfig::Validate(int num_creators) const {
  Require(max_iter >= 1, "solver max_iter must be >= 1");
  Require(std::isfinite(step) && step > 0.0, "solver step must be > 0");
  Require(std::isfinite(tolerance) && tolerance > 0.0,
          "solver tolerance must be > 0");
  Require(std::isfinite(floor) && floor > 0.0,
          "solver positivity floor must be > 0");
  if (initial.size() > 0) {
    Require(initial.size() == num_creators,
            "initial strategy must have n = " + std::to_string(num_creators) +
                " entries");
    Require(initial.allFinite() && (initial.array() >= floor).all(),
            "initial strategy must be >= the positivity floor");
  }
}

nlohmann::json SolveResultToJson(const SolveResult& result) {
  return {{"x_star",
           std::vector<double>(result.x_star.x.begin(), result.x_star.x.end())},
          {"iterations", result.iterations},
          {"final_grad_norm", result.final_grad_norm},
          {"converged", result.converged}};
}

SolveResult SolvePne(const Environment& env, const BetaPolicy& beta,
                     const SolverConfig& config,
                     const std::optional<StrategyProfile>& warm_start) {
  const int n = env.num_creators();
  config.Validate(n);
  const AllocationKernel kernel(env, beta);

  Eigen::VectorXd start = config.initial.size() > 0
                              ? config.initial
                              : Eigen::VectorXd::Ones(n);
  if (warm_start.has_value()) {
    ValidateStrategy(env, *warm_start);
    start = warm_start->x.cwiseMax(config.floor);
  }

  double step = config.step;
  for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt) {
    Eigen::VectorXd x = start;
    Eigen::VectorXd curvature;
    for (int iter = 0;; ++iter) {
      const Eigen::VectorXd grad = kernel.UtilityGradient(x, &curvature);
      const double norm = grad.norm();
      if (!std::isfinite(norm) || norm > kDivergenceNorm) break;
      if (norm < config.tolerance || iter == config.max_iter) {
        return {StrategyProfile{std::move(x)}, iter, norm,
                norm < config.tolerance, step};
      }
      // A creator whose own curvature exceeds 1/step takes the coordinate
      // Newton step instead; with c'' growing like x^(rho-2) near zero the
      // plain step would otherwise cycle between the floor and a small
      // positive value.
      const Eigen::ArrayXd local_step =
          curvature.array().inverse().min(step);
      x = (x.array() + local_step * grad.array()).max(config.floor).matrix();
    }
    step *= 0.5;
  }
  throw NumericalError("equilibrium iteration diverged even with step " +
                       std::to_string(step * 2.0));
}

double Residual(const Environment& env, const BetaPolicy& beta,
                const StrategyProfile& x) {
  return UtilityGradient(env, x, beta).norm();
}

DscCertificate DscHessian(const Environment& env, const BetaPolicy& beta,
                          const StrategyProfile& x, int max_creators) {
  const int n = env.num_creators();
  Require(n <= max_creators,
          "DSC diagnostic is limited to n <= " + std::to_string(max_creators) +
              " creators, got " + std::to_string(n));
  const Eigen::MatrixXd p = MatchProbabilities(env, x, beta).p;
  // q_ij = P_ij / x_i = a_ij / g_j. In these units the (k, l) entry of
  // g_j^{-3} a_j H_j a_j^T is q_k q_l (1 - P_k - P_l) off the diagonal and
  // 2 q_k^2 (1 - P_k) on it.
  const Eigen::MatrixXd q = x.x.cwiseInverse().asDiagonal() * p;
  const Eigen::MatrixXd qp = q.cwiseProduct(p);
  DscCertificate out;
  out.matrix = q * q.transpose() - qp * q.transpose() - q * qp.transpose();
  out.matrix.diagonal() += q.cwiseAbs2().rowwise().sum();
  for (int i = 0; i < n; ++i) {
    out.matrix(i, i) += env.costs[i].SecondDerivative(x.x[i]);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      out.matrix, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  return out;
}

}  // namespace c4
