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

#include "c4/optimizer.h"

#include <cmath>
#include <sstream>

#include "c4/csv.h"
#include "c4/errors.h"
#include "c4/implicit_grad.h"

namespace c4 {
namespace {

// The solver certifies its residual with the cached-weight gradient; the
// differentiation step re-checks it through the log-space path, which can
// differ in the last few bits.
constexpr double kResidualSlack = 1.0 + 1e-6;

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

void OptimizerConfig::Validate(int num_users) const {
  Require(iterations >= 1, "optimizer iterations must be >= 1");
  Require(std::isfinite(step) && step > 0.0, "optimizer step must be > 0");
  Require(std::isfinite(sample_rate) && sample_rate > 0.0 &&
              sample_rate <= 1.0,
          "sample rate must lie in (0, 1]");
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  Require(std::isfinite(beta_max) && beta_max > 0.0, "beta_max must be > 0");
  if (initial_beta_vector.size() > 0) {
    Require(mode == BetaMode::kPersonalized,
            "an initial beta vector requires personalized mode");
    Require(initial_beta_vector.size() == num_users,
            "initial beta must have m entries");
    Require((initial_beta_vector.array() >= 0.0).all() &&
                (initial_beta_vector.array() <= beta_max).all(),
            "initial beta must lie within [0, beta_max]");
  } else {
    Require(initial_beta >= 0.0 && initial_beta <= beta_max,
            "initial beta must lie within [0, beta_max]");
  }
}

std::uint64_t IterationSeed(std::uint64_t seed, int iteration) {
  // splitmix64 finalizer over (seed, iteration).
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL *
                               (static_cast<std::uint64_t>(iteration) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd AscentDirection(const Eigen::VectorXd& gradient,
                                BetaMode mode) {
  if (mode == BetaMode::kPersonalized) return gradient;
  return Eigen::VectorXd::Constant(gradient.size(), gradient.sum());
}

OptTrace OptimizeBeta(const Environment& env, const OptimizerConfig& config,
                      const SolverConfig& solver) {
  const int m = env.num_users();
  config.Validate(m);
  solver.Validate(env.num_creators());

  BetaPolicy beta =
      config.initial_beta_vector.size() > 0
          ? BetaPolicy::Personalized(config.initial_beta_vector)
          : BetaPolicy{Eigen::VectorXd::Constant(m, config.initial_beta),
                       config.mode};

  OptTrace trace;
  trace.final_beta = beta;
  std::optional<StrategyProfile> warm;
  for (int t = 0; t <= config.iterations; ++t) {
    SolveResult solved;
    try {
      solved = SolvePne(env, beta, solver,
                        config.warm_start ? warm : std::nullopt);
    } catch (const NumericalError& e) {
      trace.error = "iteration " + std::to_string(t) + ": " + e.what();
      break;
    }
    if (!solved.converged) {
      trace.error = "iteration " + std::to_string(t) +
                    ": equilibrium solve did not converge (residual " +
                    FormatDouble(solved.final_grad_norm) + ")";
      break;
    }

    const WelfareReport report =
        Welfare(env, solved.x_star, beta, config.lambda);
    OptRecord record;
    record.iteration = t;
    record.satisfaction = report.total_satisfaction;
    record.volume = report.total_volume;
    record.welfare = report.welfare;
    record.residual = solved.final_grad_norm;
    record.solver_iterations = solved.iterations;
    record.beta_mean = beta.beta.mean();
    record.beta_min = beta.beta.minCoeff();
    record.beta_max = beta.beta.maxCoeff();
    if (config.record_beta) record.beta = beta.beta;
    trace.records.push_back(std::move(record));
    trace.final_beta = beta;
    trace.final_report = report;
    trace.final_x = solved.x_star;
    if (t == config.iterations) break;

    Eigen::VectorXd gradient;
    try {
      gradient = WelfareGradient(
          env, solved.x_star, beta, config.lambda,
          {config.sample_rate, IterationSeed(config.seed, t),
           config.resample_diagonal},
          solver.tolerance * kResidualSlack);
    } catch (const NumericalError& e) {
      trace.error = "iteration " + std::to_string(t) + ": " + e.what();
      break;
    }
    beta.beta = (beta.beta + config.step * AscentDirection(gradient,
                                                           config.mode))
                    .cwiseMax(0.0)
                    .cwiseMin(config.beta_max);
    warm = solved.x_star;
  }
  return trace;
}

nlohmann::json BetaPolicyToJson(const BetaPolicy& beta) {
  nlohmann::json out = {{"mode", BetaModeName(beta.mode)},
                        {"beta", ToStd(beta.beta)}};
  if (beta.mode == BetaMode::kHomogeneous && beta.beta.size() > 0) {
    out["value"] = beta.beta[0];
  }
  return out;
}

std::string TraceCsv(const OptTrace& trace) {
  std::ostringstream out;
  out << "iter,U,V,W,residual,solver_iters,beta_mean,beta_min,beta_max\n";
  for (const auto& r : trace.records) {
    out << CsvRow({std::to_string(r.iteration), FormatDouble(r.satisfaction),
                   FormatDouble(r.volume), FormatDouble(r.welfare),
                   FormatDouble(r.residual),
                   std::to_string(r.solver_iterations),
                   FormatDouble(r.beta_mean), FormatDouble(r.beta_min),
                   FormatDouble(r.beta_max)})
        << '\n';
  }
  return out.str();
}

nlohmann::json TraceJson(const OptTrace& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json row = {{"iter", r.iteration},
                          {"U", r.satisfaction},
                          {"V", r.volume},
                          {"W", r.welfare},
                          {"residual", r.residual},
                          {"solver_iters", r.solver_iterations},
                          {"beta_mean", r.beta_mean},
                          {"beta_min", r.beta_min},
                          {"beta_max", r.beta_max}};
    if (r.beta.size() > 0) row["beta"] = ToStd(r.beta);
    records.push_back(std::move(row));
  }
  nlohmann::json out = {{"records", std::move(records)},
                        {"final_beta", BetaPolicyToJson(trace.final_beta)},
                        {"final_report", WelfareReportToJson(trace.final_report)}};
  out["error"] = trace.error ? nlohmann::json(*trace.error) : nlohmann::json();
  return out;
}

std::vector<SweepRow> SweepBeta(const Environment& env,
                                const std::vector<double>& grid,
                                double lambda, const SolverConfig& solver) {
  Require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  for (double b : grid) {
    Require(std::isfinite(b) && b >= 0.0, "sweep grid values must be >= 0");
  }
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  std::optional<StrategyProfile> warm;
  for (double b : grid) {
    SweepRow row;
    row.beta = b;
    const BetaPolicy beta = BetaPolicy::Homogeneous(b, env.num_users());
    try {
      const SolveResult solved = SolvePne(env, beta, solver, warm);
      row.report = Welfare(env, solved.x_star, beta, lambda);
      row.solver_iterations = solved.iterations;
      row.residual = solved.final_grad_norm;
      row.converged = solved.converged;
      if (solved.converged) {
        warm = solved.x_star;
      } else {
        row.error = "did not converge";
      }
    } catch (const NumericalError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> ParseGrid(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    std::vector<double> values = ParseDoubleList(text);
    Require(!values.empty(), "grid must not be empty");
    return values;
  }
  const auto second = text.find(':', colon + 1);
  Require(second != std::string::npos,
          "grid range must be written start:stop:step");
  const double start = ParseDoubleList(text.substr(0, colon)).at(0);
  const double stop =
      ParseDoubleList(text.substr(colon + 1, second - colon - 1)).at(0);
  const double step = ParseDoubleList(text.substr(second + 1)).at(0);
  Require(step > 0.0, "grid step must be > 0");
  Require(stop >= start, "grid stop must be >= start");
  const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> values;
  for (int k = 0; k <= count; ++k) values.push_back(start + k * step);
  return values;
}

}  // namespace c4
