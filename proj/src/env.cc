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

#include "c4/env.h"

#include <cmath>
#include <fstream>
#include <random>

#include "c4/csv.h"
#include "c4/errors.h"

namespace c4 {

double PowerCost::Value(double x) const {
  return coefficient * std::pow(x, exponent);
}

double PowerCost::FirstDerivative(double x) const {
  if (exponent == 1.0) return coefficient;
  return coefficient * exponent * std::pow(x, exponent - 1.0);
}

double PowerCost::SecondDerivative(double x) const {
  if (exponent == 1.0) return 0.0;
  if (exponent == 2.0) return 2.0 * coefficient;
  return coefficient * exponent * (exponent - 1.0) *
         std::pow(x, exponent - 2.0);
}

void PowerCost::Validate() const {
  Require(std::isfinite(coefficient) && coefficient > 0.0,
          "cost coefficient must be positive");
  Require(std::isfinite(exponent) && exponent >= 1.0,
          "cost exponent must be >= 1");
}

void Environment::Validate() const {
  Require(relevance.rows() >= 1, "environment needs n >= 1 creators");
  Require(relevance.cols() >= 1, "environment needs m >= 1 users");
  Require(static_cast<Eigen::Index>(costs.size()) == relevance.rows(),
          "costs must have exactly n = " + std::to_string(relevance.rows()) +
              " entries, got " + std::to_string(costs.size()));
  for (Eigen::Index j = 0; j < relevance.cols(); ++j) {
    for (Eigen::Index i = 0; i < relevance.rows(); ++i) {
      const double w = relevance(i, j);
      if (!(w >= 0.0 && w <= 1.0)) {
        throw ValidationError("relevance entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") = " + FormatDouble(w) +
                              " is outside [0,1]");
      }
    }
  }
  for (const auto& cost : costs) cost.Validate();
}

bool Environment::operator==(const Environment& other) const {
  return relevance.rows() == other.relevance.rows() &&
         relevance.cols() == other.relevance.cols() &&
         relevance == other.relevance && costs == other.costs &&
         meta == other.meta;
}

void SyntheticParams::Validate() const {
  Require(dim >= 1, "embedding dimension must be >= 1");
  Require(clusters >= 1, "cluster count must be >= 1");
  Require(std::isfinite(spread) && spread > 0.0,
          "cluster spread must be > 0");
  Require(num_creators >= 1, "n must be >= 1");
  Require(num_users >= 1, "m must be >= 1");
  Require(cost_exponent >= 1.0, "cost exponent must be >= 1");
  Require(cost_lo > 0.0, "cost range lower bound must be > 0");
  Require(cost_lo <= cost_hi, "cost range requires lo <= hi");
}

namespace {

Eigen::MatrixXd SampleClustered(int count, const Eigen::MatrixXd& centers,
                                double spread, std::mt19937_64& rng) {
  const int dim = static_cast<int>(centers.cols());
  std::uniform_int_distribution<int> pick(
      0, static_cast<int>(centers.rows()) - 1);
  std::normal_distribution<double> noise(0.0, spread);
  Eigen::MatrixXd points(count, dim);
  for (int r = 0; r < count; ++r) {
    const int cluster = pick(rng);
    for (int k = 0; k < dim; ++k) {
      points(r, k) = centers(cluster, k) + noise(rng);
    }
  }
  return points;
}

double DrawCoefficient(std::uniform_real_distribution<double>& dist,
                       std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : dist(rng);
}

}  // namespace

Eigen::MatrixXd NormalizedRelevance(const Eigen::MatrixXd& creators,
                                    const Eigen::MatrixXd& users) {
  if (creators.cols() != users.cols()) {
    throw ValidationError(
        "embedding dimension mismatch: creators have " +
        std::to_string(creators.cols()) + " columns, users have " +
        std::to_string(users.cols()));
  }
  Require(creators.rows() >= 1 && users.rows() >= 1,
          "embedding files must contain at least one row");
  Eigen::MatrixXd raw = creators * users.transpose();
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (!(hi > lo)) {
    throw ValidationError(
        "all raw dot products are equal; min-max normalization is undefined");
  }
  Eigen::MatrixXd w = (raw.array() - lo) / (hi - lo);
  // Pin the endpoints exactly; (hi - lo) / (hi - lo) can round below 1.
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      if (raw(i, j) == hi) w(i, j) = 1.0;
      if (raw(i, j) == lo) w(i, j) = 0.0;
    }
  }
  return w;
}

Environment GenerateSyntheticEnv(const SyntheticParams& params) {
  params.Validate();
  std::mt19937_64 rng(params.seed);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd centers(params.clusters, params.dim);
  for (int c = 0; c < params.clusters; ++c) {
    double norm = 0.0;
    do {
      for (int k = 0; k < params.dim; ++k) centers(c, k) = gauss(rng);
      norm = centers.row(c).norm();
    } while (norm == 0.0);
    centers.row(c) /= norm;
  }

  const Eigen::MatrixXd users =
      SampleClustered(params.num_users, centers, params.spread, rng);
  const Eigen::MatrixXd creators =
      SampleClustered(params.num_creators, centers, params.spread, rng);

  Environment env;
  env.relevance = NormalizedRelevance(creators, users);

  std::uniform_real_distribution<double> coef(params.cost_lo, params.cost_hi);
  env.costs.reserve(params.num_creators);
  for (int i = 0; i < params.num_creators; ++i) {
    env.costs.push_back(
        {DrawCoefficient(coef, rng, params.cost_lo, params.cost_hi),
         params.cost_exponent});
  }
  env.meta = {{"kind", "synthetic"},
              {"seed", params.seed},
              {"dim", params.dim},
              {"clusters", params.clusters},
              {"spread", params.spread}};
  env.Validate();
  return env;
}

std::vector<PowerCost> BuildCosts(const CostSpec& spec, int num_creators) {
  std::vector<PowerCost> costs;
  costs.reserve(num_creators);
  if (!spec.coefficients.empty()) {
    if (static_cast<int>(spec.coefficients.size()) != num_creators) {
      throw ValidationError("cost coefficient list has " +
                            std::to_string(spec.coefficients.size()) +
                            " entries but there are " +
                            std::to_string(num_creators) + " creators");
    }
    for (double c : spec.coefficients) costs.push_back({c, spec.exponent});
  } else {
    Require(spec.lo > 0.0 && spec.lo <= spec.hi,
            "cost range requires 0 < lo <= hi");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> coef(spec.lo, spec.hi);
    for (int i = 0; i < num_creators; ++i) {
      costs.push_back(
          {DrawCoefficient(coef, rng, spec.lo, spec.hi), spec.exponent});
    }
  }
  for (const auto& cost : costs) cost.Validate();
  return costs;
}

Environment IngestEmbeddings(const std::string& user_file,
                             const std::string& creator_file,
                             const CostSpec& cost_spec) {
  const Eigen::MatrixXd users = ReadNumericCsv(user_file);
  const Eigen::MatrixXd creators = ReadNumericCsv(creator_file);
  Environment env;
  env.relevance = NormalizedRelevance(creators, users);
  env.costs = BuildCosts(cost_spec, static_cast<int>(creators.rows()));
  env.meta = {{"kind", "ingest"}, {"cost_seed", cost_spec.seed}};
  env.Validate();
  return env;
}

nlohmann::json EnvToJson(const Environment& env) {
  nlohmann::json relevance = nlohmann::json::array();
  for (Eigen::Index i = 0; i < env.relevance.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < env.relevance.cols(); ++j) {
      row.push_back(env.relevance(i, j));
    }
    relevance.push_back(std::move(row));
  }
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& cost : env.costs) {
    costs.push_back({{"c", cost.coefficient}, {"rho", cost.exponent}});
  }
  nlohmann::json out = {{"n", env.num_creators()},
                        {"m", env.num_users()},
                        {"relevance", std::move(relevance)},
                        {"costs", std::move(costs)}};
  if (!env.meta.empty()) out["meta"] = env.meta;
  return out;
}

Environment EnvFromJson(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    Require(n >= 1 && m >= 1, "n and m must be >= 1");
    const auto& rows = j.at("relevance");
    Require(rows.is_array() && static_cast<int>(rows.size()) == n,
            "relevance must have n = " + std::to_string(n) + " rows");
    Environment env;
    env.relevance.resize(n, m);
    for (int i = 0; i < n; ++i) {
      Require(rows[i].is_array() && static_cast<int>(rows[i].size()) == m,
              "relevance row " + std::to_string(i) + " must have m = " +
                  std::to_string(m) + " columns");
      for (int k = 0; k < m; ++k) env.relevance(i, k) = rows[i][k].get<double>();
    }
    for (const auto& cost : j.at("costs")) {
      env.costs.push_back(
          {cost.at("c").get<double>(), cost.at("rho").get<double>()});
    }
    if (j.contains("meta")) env.meta = j.at("meta");
    env.Validate();
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed environment JSON: ") +
                          e.what());
  }
}

void SaveEnv(const Environment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << EnvToJson(env).dump() << '\n';
}

Environment LoadEnv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open environment file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed environment JSON in '" + path +
                          "': " + e.what());
  }
  return EnvFromJson(j);
}

}  // namespace c4
