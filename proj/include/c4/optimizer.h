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

#ifndef C4_OPTIMIZER_H_
#define C4_OPTIMIZER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "c4/env.h"
#include "c4/equilibrium.h"
#include "c4/game.h"
#include "json.hpp"

namespace c4 {

struct OptimizerConfig {
  int iterations = 100;
  double step = 200.0;
  double sample_rate = 0.1;
  // See SketchSpec::resample_diagonal.
  bool resample_diagonal = true;
  double lambda = 0.5;
  double initial_beta = 100.0;
  // Overrides initial_beta when non-empty (personalized mode only).
  Eigen::VectorXd initial_beta_vector;
  BetaMode mode = BetaMode::kPersonalized;
  double beta_max = 1e4;
  std::uint64_t seed = 0;
  bool warm_start = true;
  // Keep the full beta vector of every iteration in the trace.
  bool record_beta = false;

  void Validate(int num_users) const;
};

struct OptRecord {
  int iteration = 0;
  double satisfaction = 0.0;  // U
  double volume = 0.0;        // V
  double welfare = 0.0;       // W
  double residual = 0.0;
  int solver_iterations = 0;
  double beta_mean = 0.0;
  double beta_min = 0.0;
  double beta_max = 0.0;
  Eigen::VectorXd beta;  // empty unless record_beta
};

struct OptTrace {
  std::vector<OptRecord> records;
  BetaPolicy final_beta;
  WelfareReport final_report;
  StrategyProfile final_x;
  // Set when an equilibrium solve failed; records stop before that iteration.
  std::optional<std::string> error;
};

// Projected gradient ascent on beta. Each iteration solves the equilibrium at
// the current beta (warm-started from the previous one), records U, V, W, then
// steps beta <- clamp(beta + step * dW/dbeta, 0, beta_max) using a freshly
// seeded user sketch. Homogeneous mode moves every entry by the summed
// gradient. Yields iterations + 1 records on success.
OptTrace OptimizeBeta(const Environment& env, const OptimizerConfig& config,
                      const SolverConfig& solver);

// The per-iteration sketch seed derived from the run seed.
std::uint64_t IterationSeed(std::uint64_t seed, int iteration);

// One ascent step's direction: the personalized gradient, or in homogeneous
// mode its sum broadcast to every user.
Eigen::VectorXd AscentDirection(const Eigen::VectorXd& gradient,
                                BetaMode mode);

std::string TraceCsv(const OptTrace& trace);
nlohmann::json TraceJson(const OptTrace& trace);
nlohmann::json BetaPolicyToJson(const BetaPolicy& beta);

struct SweepRow {
  double beta = 0.0;
  WelfareReport report;
  int solver_iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::string error;
};

// Equilibrium and welfare at each homogeneous beta of `grid`, in grid order,
// each solve warm-started from the previous converged point. A failed grid
// point is marked and the sweep continues.
std::vector<SweepRow> SweepBeta(const Environment& env,
                                const std::vector<double>& grid,
                                double lambda, const SolverConfig& solver);

// Parses "start:stop:step" (inclusive of stop up to rounding) or a comma list.
std::vector<double> ParseGrid(const std::string& text);

}  // namespace c4

#endif  // C4_OPTIMIZER_H_
