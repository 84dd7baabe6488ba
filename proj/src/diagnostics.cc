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

#include "c4/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "c4/csv.h"
#include "c4/equilibrium.h"
#include "c4/errors.h"
#include "c4/game.h"
#include "c4/implicit_grad.h"

namespace c4 {
namespace {

constexpr char kFaultDuDbetaSign[] = "du-dbeta-sign";

SolverConfig TightSolver() {
  SolverConfig config;
  config.tolerance = 1e-8;
  config.max_iter = 200000;
  return config;
}

CheckResult Verdict(std::string name, double metric, double threshold,
                    std::string detail, bool below = true) {
  const bool passed = below ? metric <= threshold : metric > threshold;
  return {std::move(name), passed, metric, threshold, std::move(detail)};
}

// Utility gradient against central differences of the utilities, and the
// welfare gradient against central differences of W through re-solved
// equilibria.
//
// Re-solves at beta +- h start from the same default point rather than from
// the base equilibrium: both then stop on the same side of their targets and
// the stopping error largely cancels in the difference. Warm-started from the
// base point they approach from opposite sides and the error doubles instead.
CheckResult CheckGradient(std::uint64_t seed, const std::string& fault) {
  const Environment env = RandomEnvironment(5, 3, 1.5, seed);
  std::mt19937_64 rng(seed ^ 0xA5A5);
  std::uniform_real_distribution<double> unif(0.3, 2.0);
  Eigen::VectorXd beta_values(3);
  for (auto& b : beta_values) b = 3.0 * unif(rng);
  const BetaPolicy beta = BetaPolicy::Personalized(beta_values);

  Eigen::VectorXd x(5);
  for (auto& v : x) v = unif(rng);
  const Eigen::VectorXd analytic = UtilityGradient(env, {x}, beta);
  Eigen::VectorXd numeric(5);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += h;
    down[i] -= h;
    numeric[i] = (CreatorUtilities(env, {up}, beta)[i] -
                  CreatorUtilities(env, {down}, beta)[i]) /
                 (2 * h);
  }
  const double utility_err = RelativeErrorInf(analytic, numeric);

  const double lambda = 0.5;
  const SolverConfig solver = TightSolver();
  const SolveResult base = SolvePne(env, beta, solver);
  Eigen::VectorXd welfare_grad =
      WelfareGradient(env, base.x_star, beta, lambda, {1.0, seed}, 1e-6);
  if (fault == kFaultDuDbetaSign) {
    welfare_grad -=
        2.0 * ComputeSatisfactionPartials(env, base.x_star, beta).du_dbeta;
  }
  Eigen::VectorXd welfare_fd(3);
  const double hb = 1e-4;
  for (int j = 0; j < 3; ++j) {
    BetaPolicy up = beta, down = beta;
    up.beta[j] += hb;
    down.beta[j] -= hb;
    const auto x_up = SolvePne(env, up, solver).x_star;
    const auto x_down = SolvePne(env, down, solver).x_star;
    welfare_fd[j] = (Welfare(env, x_up, up, lambda).welfare -
                     Welfare(env, x_down, down, lambda).welfare) /
                    (2 * hb);
  }
  const double welfare_err = RelativeErrorInf(welfare_grad, welfare_fd);
  // The two comparisons have their own tolerances; report the worse ratio.
  const double score = std::max(utility_err / 1e-5, welfare_err / 1e-3);
  return Verdict("gradient", score, 1.0,
                 "utility rel err " + FormatDouble(utility_err) +
                     " (tol 1e-5), welfare rel err " +
                     FormatDouble(welfare_err) + " (tol 1e-3)");
}

CheckResult CheckJacobian(std::uint64_t seed) {
  const int n = 10, m = 5;
  const Environment env = RandomEnvironment(n, m, 1.5, seed + 1);
  const BetaPolicy beta = BetaPolicy::Personalized(
      Eigen::VectorXd::LinSpaced(m, 1.0, 4.0));
  const SolverConfig solver = TightSolver();
  const SolveResult base = SolvePne(env, beta, solver);
  const Eigen::MatrixXd exact =
      JacobianExact(ComputePnePartials(env, base.x_star, beta, 1e-6));
  Eigen::MatrixXd numeric(n, m);
  const double h = 1e-4;
  for (int j = 0; j < m; ++j) {
    BetaPolicy up = beta, down = beta;
    up.beta[j] += h;
    down.beta[j] -= h;
    numeric.col(j) = (SolvePne(env, up, solver).x_star.x -
                      SolvePne(env, down, solver).x_star.x) /
                     (2 * h);
  }
  const double err = MaxRelativeError(exact, numeric, 1e-6);
  return Verdict("jacobian", err, 1e-3,
                 "max entrywise rel err vs re-solve differences");
}

CheckResult CheckSmw(std::uint64_t seed) {
  const Environment env = RandomEnvironment(20, 8, 1.5, seed + 2);
  const BetaPolicy beta = BetaPolicy::Homogeneous(5.0, 8);
  const SolveResult base = SolvePne(env, beta, TightSolver());
  const Eigen::VectorXd smw =
      WelfareGradient(env, base.x_star, beta, 0.5, {1.0, seed}, 1e-6);
  const Eigen::VectorXd dense =
      WelfareGradientDense(env, base.x_star, beta, 0.5, 1e-6);
  const double err = RelativeErrorInf(smw, dense);
  return Verdict("smw", err, 1e-8, "Woodbury vs dense-solve welfare gradient");
}

CheckResult CheckDsc(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 15;
    const int m = 1 + trial % 7;
    const Environment env = RandomEnvironment(n, m, 1.5, seed + 100 + trial);
    Eigen::VectorXd beta(m), x(n);
    for (auto& b : beta) b = 10.0 * unif(rng);
    for (auto& v : x) v = 0.01 + 5.0 * unif(rng);
    worst = std::min(
        worst,
        DscHessian(env, BetaPolicy::Personalized(beta), {x}).min_eigenvalue);
  }
  return Verdict("dsc", worst, 0.0,
                 "smallest eigenvalue over 100 random points", false);
}

}  // namespace

Environment RandomEnvironment(int num_creators, int num_users,
                              double cost_exponent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> coef(0.1, 0.5);
  Environment env;
  env.relevance.resize(num_creators, num_users);
  for (int j = 0; j < num_users; ++j) {
    for (int i = 0; i < num_creators; ++i) env.relevance(i, j) = unif(rng);
  }
  for (int i = 0; i < num_creators; ++i) {
    env.costs.push_back({coef(rng), cost_exponent});
  }
  env.Validate();
  return env;
}

double MaxRelativeError(const Eigen::MatrixXd& actual,
                        const Eigen::MatrixXd& expected,
                        double min_magnitude) {
  Require(actual.rows() == expected.rows() && actual.cols() == expected.cols(),
          "shape mismatch in relative error");
  double worst = 0.0;
  for (Eigen::Index j = 0; j < expected.cols(); ++j) {
    for (Eigen::Index i = 0; i < expected.rows(); ++i) {
      const double e = expected(i, j);
      if (std::abs(e) <= min_magnitude) continue;
      worst = std::max(worst, std::abs(actual(i, j) - e) / std::abs(e));
    }
  }
  return worst;
}

double RelativeErrorInf(const Eigen::VectorXd& actual,
                        const Eigen::VectorXd& expected) {
  const double scale = expected.lpNorm<Eigen::Infinity>();
  const double diff = (actual - expected).lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return diff == 0.0 ? 0.0 : HUGE_VAL;
  return diff / scale;
}

const std::vector<std::string>& CheckNames() {
  static const std::vector<std::string> names = {"gradient", "jacobian", "smw",
                                                 "dsc"};
  return names;
}

std::vector<CheckResult> RunChecks(const CheckOptions& options) {
  for (const auto& name : options.skip) {
    Require(std::find(CheckNames().begin(), CheckNames().end(), name) !=
                CheckNames().end(),
            "unknown check '" + name + "'");
  }
  Require(options.inject_fault.empty() ||
              options.inject_fault == kFaultDuDbetaSign,
          "unknown fault '" + options.inject_fault + "'");
  std::vector<CheckResult> results;
  auto enabled = [&](const char* name) { return !options.skip.count(name); };
  if (enabled("gradient")) {
    results.push_back(CheckGradient(options.seed, options.inject_fault));
  }
  if (enabled("jacobian")) results.push_back(CheckJacobian(options.seed));
  if (enabled("smw")) results.push_back(CheckSmw(options.seed));
  if (enabled("dsc")) results.push_back(CheckDsc(options.seed));
  return results;
}

}  // namespace c4
