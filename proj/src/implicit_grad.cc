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

#include "c4/implicit_grad.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "c4/equilibrium.h"
#include "c4/errors.h"

namespace c4 {
namespace {

constexpr double kMinReciprocalCondition = 1e-12;
constexpr double kMinInnerScale = 1e-10;
constexpr double kInnerRegularization = 1e-12;

// (w_ij - T_j) with T_j = sum_k w_kj P_kj, accumulated relative to the first
// creator's score so that a column of identical scores gives exact zeros.
Eigen::MatrixXd RelevanceDeviation(const Environment& env,
                                   const Eigen::MatrixXd& p) {
  Eigen::MatrixXd dev = env.relevance.rowwise() - env.relevance.row(0);
  const Eigen::RowVectorXd shift =
      dev.cwiseProduct(p).colwise().sum();  // T_j - w_0j
  dev.rowwise() -= shift;
  return dev;
}

}  // namespace

PnePartials ComputePnePartials(const Environment& env,
                               const StrategyProfile& x_star,
                               const BetaPolicy& beta,
                               double residual_tolerance) {
  const double residual = Residual(env, beta, x_star);
  if (!(residual < residual_tolerance)) {
    throw NumericalError("point is not an equilibrium: residual " +
                         std::to_string(residual) + " >= tolerance " +
                         std::to_string(residual_tolerance) +
                         "; re-solve before differentiating");
  }
  const Eigen::MatrixXd p = MatchProbabilities(env, x_star, beta).p;
  const Eigen::VectorXd inv_x = x_star.x.cwiseInverse();

  PnePartials out;
  out.z = inv_x.asDiagonal() * p;
  out.y = out.z.cwiseProduct((1.0 - 2.0 * p.array()).matrix());
  out.b = out.y.cwiseProduct(RelevanceDeviation(env, p));
  out.cost_curvature.resize(env.num_creators());
  for (int i = 0; i < env.num_creators(); ++i) {
    out.cost_curvature[i] = env.costs[i].SecondDerivative(x_star.x[i]);
  }
  out.d = out.cost_curvature + out.z.cwiseAbs2().rowwise().sum();
  return out;
}

Eigen::MatrixXd JacobianExact(const PnePartials& partials) {
  Eigen::MatrixXd system = partials.y * partials.z.transpose();
  system.diagonal() += partials.d;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    throw NumericalError("equilibrium Jacobian system is singular or "
                         "ill-conditioned (rcond " +
                         std::to_string(rcond) + ")");
  }
  return lu.solve(partials.b);
}

void SketchSpec::Validate() const {
  Require(std::isfinite(rate) && rate > 0.0 && rate <= 1.0,
          "sample rate must lie in (0, 1]");
}

int SketchSpec::SampleSize(int num_users) const {
  const int size = static_cast<int>(std::ceil(rate * num_users - 1e-9));
  return std::clamp(size, 1, num_users);
}

Sketch SketchMatrices(const PnePartials& partials, const SketchSpec& spec) {
  spec.Validate();
  const int m = static_cast<int>(partials.y.cols());
  const int sample = spec.SampleSize(m);

  Sketch out;
  out.column_map.resize(m);
  if (sample == m) {
    out.support.resize(m);
    std::iota(out.support.begin(), out.support.end(), 0);
    out.column_map = out.support;
    out.d = partials.d;
    out.y = partials.y;
    out.z = partials.z;
    return out;
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < sample; ++k) {
    std::uniform_int_distribution<int> pick(k, m - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  out.support.assign(order.begin(), order.begin() + sample);
  std::sort(out.support.begin(), out.support.end());

  std::uniform_int_distribution<int> slot(0, sample - 1);
  out.y.resize(partials.y.rows(), m);
  out.z.resize(partials.z.rows(), m);
  for (int j = 0; j < m; ++j) {
    const int source = out.support[slot(rng)];
    out.column_map[j] = source;
    out.y.col(j) = partials.y.col(source);
    out.z.col(j) = partials.z.col(source);
  }
  out.d = spec.resample_diagonal
              ? Eigen::VectorXd(partials.cost_curvature +
                                out.z.cwiseAbs2().rowwise().sum())
              : partials.d;
  return out;
}

LowRankUpdate CompactUpdate(const PnePartials& partials) {
  return {partials.y, partials.z};
}

LowRankUpdate CompactUpdate(const PnePartials& partials,
                            const Sketch& sketch) {
  const int m = static_cast<int>(partials.y.cols());
  std::vector<int> count(m, 0);
  for (int source : sketch.column_map) ++count[source];
  std::vector<int> used;
  for (int s : sketch.support) {
    if (count[s] > 0) used.push_back(s);
  }
  LowRankUpdate out{Eigen::MatrixXd(partials.y.rows(), used.size()),
                    Eigen::MatrixXd(partials.z.rows(), used.size())};
  for (std::size_t k = 0; k < used.size(); ++k) {
    out.left.col(k) = count[used[k]] * partials.y.col(used[k]);
    out.right.col(k) = partials.z.col(used[k]);
  }
  return out;
}

Eigen::MatrixXd SmwApply(const Eigen::VectorXd& d, const LowRankUpdate& update,
                         const Eigen::MatrixXd& rhs) {
  const Eigen::VectorXd d_inv = d.cwiseInverse();
  Eigen::MatrixXd result = d_inv.asDiagonal() * rhs;
  const Eigen::Index rank = update.left.cols();
  if (rank == 0) return result;

  const Eigen::MatrixXd d_inv_left = d_inv.asDiagonal() * update.left;
  Eigen::MatrixXd inner = update.right.transpose() * d_inv_left;
  inner.diagonal().array() += 1.0 + kInnerRegularization;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(inner);
  // rcond alone is scale-free; the inner matrix is I plus a correction, so
  // also compare its smallest scale, about 1 / ||inner^-1||, against 1.
  const double rcond = lu.rcond();
  const double smallest = rcond * inner.cwiseAbs().colwise().sum().maxCoeff();
  if (!(rcond >= kMinReciprocalCondition) ||
      !(smallest >= kMinInnerScale)) {
    throw NumericalError("Woodbury inner system is singular (rcond " +
                         std::to_string(rcond) + ", scale " +
                         std::to_string(smallest) + ")");
  }
  result -= d_inv_left * lu.solve(update.right.transpose() * result);
  return result;
}

Eigen::MatrixXd SmwApply(const PnePartials& partials,
                         const Eigen::MatrixXd& rhs) {
  return SmwApply(partials.d, CompactUpdate(partials), rhs);
}

Eigen::MatrixXd SmwApply(const PnePartials& partials, const Sketch& sketch,
                         const Eigen::MatrixXd& rhs) {
  return SmwApply(sketch.d, CompactUpdate(partials, sketch), rhs);
}

SatisfactionPartials ComputeSatisfactionPartials(const Environment& env,
                                                 const StrategyProfile& x,
                                                 const BetaPolicy& beta) {
  const Eigen::MatrixXd p = MatchProbabilities(env, x, beta).p;
  const Eigen::MatrixXd dev = RelevanceDeviation(env, p);
  const Eigen::MatrixXd p_dev = p.cwiseProduct(dev);
  SatisfactionPartials out;
  out.du_dx = x.x.cwiseInverse().cwiseProduct(p_dev.rowwise().sum());
  // sum_i w_ij^2 P_ij - T_j^2 written as the P-weighted variance of column j.
  out.du_dbeta = p_dev.cwiseProduct(dev).colwise().sum().transpose();
  return out;
}

Eigen::VectorXd WelfareGradient(const Environment& env,
                                const StrategyProfile& x_star,
                                const BetaPolicy& beta, double lambda,
                                const SketchSpec& spec,
                                double residual_tolerance) {
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  const PnePartials partials =
      ComputePnePartials(env, x_star, beta, residual_tolerance);
  const Sketch sketch = SketchMatrices(partials, spec);
  const SatisfactionPartials direct =
      ComputeSatisfactionPartials(env, x_star, beta);
  const Eigen::VectorXd weight =
      direct.du_dx + Eigen::VectorXd::Constant(env.num_creators(), lambda);
  const Eigen::MatrixXd jacobian = SmwApply(partials, sketch, partials.b);
  return jacobian.transpose() * weight + direct.du_dbeta;
}

Eigen::VectorXd WelfareGradientDense(const Environment& env,
                                     const StrategyProfile& x_star,
                                     const BetaPolicy& beta, double lambda,
                                     double residual_tolerance) {
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  const PnePartials partials =
      ComputePnePartials(env, x_star, beta, residual_tolerance);
  const SatisfactionPartials direct =
      ComputeSatisfactionPartials(env, x_star, beta);
  const Eigen::VectorXd weight =
      direct.du_dx + Eigen::VectorXd::Constant(env.num_creators(), lambda);
  return JacobianExact(partials).transpose() * weight + direct.du_dbeta;
}

}  // namespace c4
