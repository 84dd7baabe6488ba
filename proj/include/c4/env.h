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

#ifndef C4_ENV_H_
#define C4_ENV_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace c4 {

// c * x^rho with c > 0 and rho >= 1.
struct PowerCost {
  double coefficient = 1.0;
  double exponent = 1.0;

  double Value(double x) const;
  double FirstDerivative(double x) const;
  double SecondDerivative(double x) const;

  void Validate() const;
  bool operator==(const PowerCost&) const = default;
};

// A game instance: n creators, m users, the n-by-m relevance matrix with
// entries in [0, 1], and one cost function per creator. Column j of
// `relevance` holds user j's preference over all creators.
struct Environment {
  Eigen::MatrixXd relevance;
  std::vector<PowerCost> costs;
  nlohmann::json meta = nlohmann::json::object();

  int num_creators() const { return static_cast<int>(relevance.rows()); }
  int num_users() const { return static_cast<int>(relevance.cols()); }

  // Throws ValidationError naming the first violated invariant.
  void Validate() const;

  bool operator==(const Environment& other) const;
};

struct SyntheticParams {
  int dim = 32;
  int clusters = 50;
  double spread = 0.5;
  int num_creators = 200;
  int num_users = 1000;
  double cost_exponent = 1.5;
  double cost_lo = 0.1;
  double cost_hi = 0.5;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Clustered-embedding environment: centers uniform on the unit sphere, each
// user and creator assigned a uniformly random cluster and drawn from
// N(center, spread^2 I). Relevance is the globally min-max normalized dot
// product. Pure function of `params`.
Environment GenerateSyntheticEnv(const SyntheticParams& params);

// How to attach costs to ingested creators: either an explicit coefficient per
// creator, or coefficients drawn i.i.d. from U[lo, hi] with `seed`.
struct CostSpec {
  double exponent = 1.5;
  std::vector<double> coefficients;
  double lo = 0.1;
  double hi = 0.5;
  std::uint64_t seed = 0;
};

std::vector<PowerCost> BuildCosts(const CostSpec& spec, int num_creators);

// Relevance from raw embedding dot products, min-max normalized over the
// whole matrix. `creators` is n-by-d, `users` is m-by-d.
Eigen::MatrixXd NormalizedRelevance(const Eigen::MatrixXd& creators,
                                    const Eigen::MatrixXd& users);

// Builds an environment from headerless CSV embedding files.
Environment IngestEmbeddings(const std::string& user_file,
                             const std::string& creator_file,
                             const CostSpec& cost_spec);

nlohmann::json EnvToJson(const Environment& env);
Environment EnvFromJson(const nlohmann::json& j);

void SaveEnv(const Environment& env, const std::string& path);
Environment LoadEnv(const std::string& path);

}  // namespace c4

#endif  // C4_ENV_H_
