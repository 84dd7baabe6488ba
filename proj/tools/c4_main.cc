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

// Command-line driver: gen-env, solve, sweep, optimize, check.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "c4/csv.h"
#include "c4/diagnostics.h"
#include "c4/env.h"
#include "c4/equilibrium.h"
#include "c4/errors.h"
#include "c4/game.h"
#include "c4/optimizer.h"
#include "json.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw c4::ValidationError("cannot write '" + path + "'");
  out << text;
}

std::string Dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct SyntheticFlags {
  c4::SyntheticParams params;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--n", params.num_creators, "Number of creators");
    cmd->add_option("--m", params.num_users, "Number of users");
    cmd->add_option("--dim", params.dim, "Embedding dimension");
    cmd->add_option("--clusters", params.clusters, "Number of clusters");
    cmd->add_option("--spread", params.spread, "Cluster standard deviation");
    cmd->add_option("--rho", params.cost_exponent, "Cost exponent");
    cmd->add_option("--cost-lo", params.cost_lo, "Cost coefficient lower bound");
    cmd->add_option("--cost-hi", params.cost_hi, "Cost coefficient upper bound");
  }
};

struct SolverFlags {
  c4::SolverConfig config;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--max-iter", config.max_iter, "Equilibrium iteration cap");
    cmd->add_option("--solver-eta", config.step, "Equilibrium step size");
    cmd->add_option("--tol", config.tolerance,
                    "Equilibrium gradient-norm tolerance");
  }
};

// ---------------------------------------------------------------- gen-env

struct GenEnvCommand {
  std::string kind = "synthetic";
  std::uint64_t seed = 0;
  std::string out;
  SyntheticFlags synthetic;
  std::string users, creators, costs;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--kind", kind, "synthetic or ingest")
        ->check(CLI::IsMember({"synthetic", "ingest"}));
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--out", out, "Output environment JSON (default stdout)");
    synthetic.Attach(cmd);
    cmd->add_option("--users", users, "User embedding CSV (ingest)");
    cmd->add_option("--creators", creators, "Creator embedding CSV (ingest)");
    cmd->add_option("--costs", costs,
                    "Comma-separated cost coefficients, one per creator "
                    "(ingest; default: drawn from [cost-lo, cost-hi])");
  }

  int Run() {
    c4::Environment env;
    if (kind == "synthetic") {
      synthetic.params.seed = seed;
      env = c4::GenerateSyntheticEnv(synthetic.params);
    } else {
      c4::Require(!users.empty() && !creators.empty(),
                  "ingest requires --users and --creators");
      c4::CostSpec spec;
      spec.exponent = synthetic.params.cost_exponent;
      spec.coefficients = c4::ParseDoubleList(costs);
      spec.lo = synthetic.params.cost_lo;
      spec.hi = synthetic.params.cost_hi;
      spec.seed = seed;
      env = c4::IngestEmbeddings(users, creators, spec);
    }
    WriteText(out, c4::EnvToJson(env).dump() + "\n");
    return 0;
  }
};

// ---------------------------------------------------------------- solve

struct SolveCommand {
  std::string env_path, beta_file, out;
  double beta = 0.0;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  bool random_init = false;
  SolverFlags solver;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--env", env_path, "Environment JSON")->required();
    cmd->add_option("--beta", beta, "Homogeneous exploration strength");
    cmd->add_option("--beta-file", beta_file,
                    "JSON with a per-user beta array (overrides --beta)");
    cmd->add_option("--lambda", lambda, "Weight of V in W = U + lambda V");
    cmd->add_option("--seed", seed, "Seed for --random-init");
    cmd->add_flag("--random-init", random_init,
                  "Start from a random positive point instead of all ones");
    cmd->add_option("--out", out, "Output JSON (default stdout)");
    solver.Attach(cmd);
  }

  int Run() {
    const c4::Environment env = c4::LoadEnv(env_path);
    c4::BetaPolicy policy = c4::BetaPolicy::Homogeneous(beta, env.num_users());
    if (!beta_file.empty()) {
      std::ifstream in(beta_file);
      c4::Require(static_cast<bool>(in), "cannot open '" + beta_file + "'");
      nlohmann::json j;
      try {
        in >> j;
        const auto values =
            (j.is_object() ? j.at("beta") : j).get<std::vector<double>>();
        policy = c4::BetaPolicy::Personalized(
            Eigen::Map<const Eigen::VectorXd>(values.data(), values.size()));
      } catch (const nlohmann::json::exception& e) {
        throw c4::ValidationError("malformed beta file: " +
                                  std::string(e.what()));
      }
    }
    policy.Validate(env.num_users());
    c4::Require(lambda >= 0.0, "lambda must be >= 0");
    if (random_init) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unif(0.1, 3.0);
      solver.config.initial.resize(env.num_creators());
      for (auto& v : solver.config.initial) v = unif(rng);
    }
    const c4::SolveResult result = c4::SolvePne(env, policy, solver.config);
    const c4::WelfareReport report =
        c4::Welfare(env, result.x_star, policy, lambda);
    const nlohmann::json j = {{"solve", c4::SolveResultToJson(result)},
                              {"welfare", c4::WelfareReportToJson(report)}};
    WriteText(out, Dump(j));
    std::cerr << "U=" << c4::FormatDouble(report.total_satisfaction)
              << " V=" << c4::FormatDouble(report.total_volume)
              << " W=" << c4::FormatDouble(report.welfare)
              << " converged=" << (result.converged ? "true" : "false")
              << " iterations=" << result.iterations << "\n";
    return result.converged ? 0 : kExitNumerical;
  }
};

// ---------------------------------------------------------------- sweep

std::vector<std::uint64_t> ParseSeedRange(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(text.substr(0, dots));
      const std::uint64_t hi = std::stoull(text.substr(dots + 2));
      c4::Require(lo <= hi, "seed range must be lo..hi with lo <= hi");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) seeds.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw c4::ValidationError("malformed seed list '" + text + "'");
  }
  return seeds;
}

struct SweepCommand {
  std::string env_path, grid = "0:10:0.5", out, detail_out, seeds_text;
  double lambda = 0.5;
  int repeats = 0;
  std::uint64_t seed = 0;
  SyntheticFlags synthetic;
  SolverFlags solver;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--env", env_path, "Environment JSON (single sweep)");
    cmd->add_option("--grid", grid, "start:stop:step or comma list of beta");
    cmd->add_option("--lambda", lambda, "Weight of V in W");
    cmd->add_option("--repeats", repeats,
                    "Regenerate this many synthetic environments and report "
                    "mean/std per beta");
    cmd->add_option("--seeds", seeds_text,
                    "Seeds for --repeats, lo..hi or a comma list "
                    "(default: --seed .. --seed + repeats - 1)");
    cmd->add_option("--seed", seed, "Base seed");
    cmd->add_option("--out", out, "Output CSV (default stdout)");
    cmd->add_option("--detail-out", detail_out,
                    "Optional JSON with x* and pi for every grid point");
    synthetic.Attach(cmd);
    solver.Attach(cmd);
  }

  int Run() {
    const std::vector<double> betas = c4::ParseGrid(grid);
    if (repeats > 0) return RunRepeated(betas);
    c4::Require(!env_path.empty(), "sweep requires --env or --repeats");
    const c4::Environment env = c4::LoadEnv(env_path);
    const auto rows = c4::SweepBeta(env, betas, lambda, solver.config);
    std::ostringstream csv;
    csv << "beta,U,V,W,converged\n";
    nlohmann::json detail = nlohmann::json::array();
    bool all_ok = true;
    for (const auto& row : rows) {
      all_ok = all_ok && row.converged;
      csv << c4::CsvRow({c4::FormatDouble(row.beta),
                         c4::FormatDouble(row.report.total_satisfaction),
                         c4::FormatDouble(row.report.total_volume),
                         c4::FormatDouble(row.report.welfare),
                         row.converged ? "1" : "0"})
          << '\n';
      nlohmann::json item = c4::WelfareReportToJson(row.report);
      item["beta"] = row.beta;
      item["converged"] = row.converged;
      if (!row.error.empty()) item["error"] = row.error;
      detail.push_back(std::move(item));
    }
    WriteText(out, csv.str());
    if (!detail_out.empty()) WriteText(detail_out, Dump(detail));
    return all_ok ? 0 : kExitNumerical;
  }

  int RunRepeated(const std::vector<double>& betas) {
    std::vector<std::uint64_t> seeds;
    if (seeds_text.empty()) {
      for (int r = 0; r < repeats; ++r) seeds.push_back(seed + r);
    } else {
      seeds = ParseSeedRange(seeds_text);
      c4::Require(static_cast<int>(seeds.size()) == repeats,
                  "--seeds must list exactly --repeats seeds");
    }
    const std::size_t k = betas.size();
    std::vector<std::vector<double>> u(k), v(k), w(k);
    std::vector<int> failed(k, 0);
    for (std::uint64_t s : seeds) {
      c4::SyntheticParams params = synthetic.params;
      params.seed = s;
      const c4::Environment env = c4::GenerateSyntheticEnv(params);
      const auto rows = c4::SweepBeta(env, betas, lambda, solver.config);
      for (std::size_t r = 0; r < k; ++r) {
        if (!rows[r].converged) {
          ++failed[r];
          continue;
        }
        u[r].push_back(rows[r].report.total_satisfaction);
        v[r].push_back(rows[r].report.total_volume);
        w[r].push_back(rows[r].report.welfare);
      }
    }
    auto mean_std = [](const std::vector<double>& xs) {
      if (xs.empty()) return std::pair{std::nan(""), std::nan("")};
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
      return std::pair{mean, sd};
    };
    std::ostringstream csv;
    csv << "beta,U_mean,U_std,V_mean,V_std,W_mean,W_std,failed\n";
    for (std::size_t r = 0; r < k; ++r) {
      const auto [um, us] = mean_std(u[r]);
      const auto [vm, vs] = mean_std(v[r]);
      const auto [wm, ws] = mean_std(w[r]);
      csv << c4::CsvRow({c4::FormatDouble(betas[r]), c4::FormatDouble(um),
                         c4::FormatDouble(us), c4::FormatDouble(vm),
                         c4::FormatDouble(vs), c4::FormatDouble(wm),
                         c4::FormatDouble(ws), std::to_string(failed[r])})
          << '\n';
    }
    WriteText(out, csv.str());
    for (int f : failed) {
      if (f > 0) return kExitNumerical;
    }
    return 0;
  }
};

// ---------------------------------------------------------------- optimize

struct OptimizeCommand {
  std::string env_path, out, beta_out, trace_json, mode = "personalized";
  bool snapshots = false, no_warm_start = false;
  c4::OptimizerConfig config;
  SolverFlags solver;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--env", env_path, "Environment JSON")->required();
    cmd->add_option("--lambda", config.lambda, "Weight of V in W");
    cmd->add_option("--mode", mode, "personalized or homogeneous")
        ->check(CLI::IsMember({"personalized", "homogeneous"}));
    cmd->add_option("--iters", config.iterations, "Outer iterations");
    cmd->add_option("--eta", config.step, "Outer step size");
    cmd->add_option("--rate", config.sample_rate, "User sample rate in (0,1]");
    cmd->add_flag("!--fixed-diagonal", config.resample_diagonal,
                  "Resample only y and z, keeping the exact diagonal");
    cmd->add_option("--beta0", config.initial_beta, "Initial beta");
    cmd->add_option("--beta-max", config.beta_max, "Upper bound on beta");
    cmd->add_option("--seed", config.seed, "Sketch seed");
    cmd->add_flag("--no-warm-start", no_warm_start,
                  "Cold-start every equilibrium solve");
    cmd->add_option("--out", out, "Trace CSV (default stdout)");
    cmd->add_option("--beta-out", beta_out, "Final beta JSON");
    cmd->add_option("--trace-json", trace_json, "Full trace JSON");
    cmd->add_flag("--snapshots", snapshots,
                  "Include every iteration's beta vector in --trace-json");
    solver.Attach(cmd);
  }

  int Run() {
    const c4::Environment env = c4::LoadEnv(env_path);
    config.mode = c4::ParseBetaMode(mode);
    config.warm_start = !no_warm_start;
    config.record_beta = snapshots;
    const c4::OptTrace trace = c4::OptimizeBeta(env, config, solver.config);
    WriteText(out, c4::TraceCsv(trace));
    if (!beta_out.empty()) {
      WriteText(beta_out, Dump(c4::BetaPolicyToJson(trace.final_beta)));
    }
    if (!trace_json.empty()) WriteText(trace_json, Dump(c4::TraceJson(trace)));
    if (trace.error) {
      std::cerr << "error: " << *trace.error << "\n";
      return kExitNumerical;
    }
    return 0;
  }
};

// ---------------------------------------------------------------- check

struct CheckCommand {
  std::uint64_t seed = 0;
  std::vector<std::string> skip;
  std::string fault, out;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for the random instances");
    cmd->add_option("--skip", skip, "Checks to skip (gradient, jacobian, smw, "
                                    "dsc)")
        ->delimiter(',');
    cmd->add_option("--inject-fault", fault,
                    "Deliberately break a quantity (du-dbeta-sign)");
    cmd->add_option("--out", out, "Report file (default stdout)");
  }

  int Run() {
    c4::CheckOptions options;
    options.seed = seed;
    options.skip = std::set<std::string>(skip.begin(), skip.end());
    options.inject_fault = fault;
    const auto results = c4::RunChecks(options);
    std::ostringstream report;
    bool all = true;
    for (const auto& r : results) {
      all = all && r.passed;
      report << (r.passed ? "PASS " : "FAIL ") << r.name
             << " metric=" << c4::FormatDouble(r.metric)
             << " threshold=" << c4::FormatDouble(r.threshold) << " ("
             << r.detail << ")\n";
    }
    report << (all ? "all checks passed" : "some checks failed") << "\n";
    WriteText(out, report.str());
    return all ? 0 : kExitNumerical;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Creator competition equilibrium solver and exploration "
               "optimizer"};
  app.require_subcommand(1);

  GenEnvCommand gen_env;
  SolveCommand solve;
  SweepCommand sweep;
  OptimizeCommand optimize;
  CheckCommand check;
  gen_env.Attach(app.add_subcommand("gen-env", "Generate or ingest an environment"));
  solve.Attach(app.add_subcommand("solve", "Solve one equilibrium"));
  sweep.Attach(app.add_subcommand("sweep", "Sweep homogeneous beta"));
  optimize.Attach(app.add_subcommand("optimize", "Optimize beta for W"));
  check.Attach(app.add_subcommand("check", "Run numerical self-checks"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "gen-env") return gen_env.Run();
    if (name == "solve") return solve.Run();
    if (name == "sweep") return sweep.Run();
    if (name == "optimize") return optimize.Run();
    return check.Run();
  } catch (const c4::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const c4::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
