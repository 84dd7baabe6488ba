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

#include <cmath>
#include <random>
#include <set>

#include "c4/diagnostics.h"
#include "c4/equilibrium.h"
#include "c4/errors.h"
#include "doctest.h"
#include "test_support.h"

namespace c4 {
namespace {

using testing::MakeEnv;

SolverConfig Tight() {
  SolverConfig config;
  config.tolerance = 1e-8;
  config.max_iter = 1000000;
  return config;
}

struct Solved {
  Environment env;
  BetaPolicy beta;
  StrategyProfile x;
};

Solved SolveRandom(int n, int m, std::uint64_t seed, double beta_lo,
                   double beta_hi) {
  Solved s{RandomEnvironment(n, m, 1.5, seed), {}, {}};
  s.beta = BetaPolicy::Personalized(
      Eigen::VectorXd::LinSpaced(m, beta_lo, beta_hi));
  const SolveResult r = SolvePne(s.env, s.beta, Tight());
  REQUIRE(r.converged);
  s.x = r.x_star;
  return s;
}

// Identical relevance across creators in every column.
Solved SolveIdentical() {
  Eigen::MatrixXd w(4, 3);
  w.row(0) << 0.2, 0.7, 0.5;
  for (int i = 1; i < 4; ++i) w.row(i) = w.row(0);
  Solved s{MakeEnv(w, {0.1, 0.2, 0.3, 0.4}, 1.5), {}, {}};
  s.beta = BetaPolicy::Personalized(Eigen::Vector3d(1.0, 4.0, 9.0));
  s.x = SolvePne(s.env, s.beta, Tight()).x_star;
  return s;
}

TEST_CASE("partials at the half-half point") {
  Eigen::MatrixXd w(2, 1);
  w << 1.0, 0.0;
  const Environment env = MakeEnv(w, {0.25, 0.25}, 1.0);
  const BetaPolicy beta = BetaPolicy::Homogeneous(0.0, 1);
  const PnePartials p =
      ComputePnePartials(env, {Eigen::Vector2d(1.0, 1.0)}, beta);
  for (int i = 0; i < 2; ++i) {
    CHECK(p.d[i] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p.y(i, 0) == 0.0);
    CHECK(p.z(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p.b(i, 0) == 0.0);
  }
  const SatisfactionPartials direct =
      ComputeSatisfactionPartials(env, {Eigen::Vector2d(1.0, 1.0)}, beta);
  // (1 * 0.5 + 0 * 0.5) - 0.5^2.
  CHECK(direct.du_dbeta[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("partials require an equilibrium") {
  const Environment env = RandomEnvironment(4, 2, 1.5, 1);
  CHECK_THROWS_AS(ComputePnePartials(env, StrategyProfile::Constant(4, 5.0),
                                     BetaPolicy::Homogeneous(1.0, 2)),
                  NumericalError);
}

TEST_CASE("the implicit system matches finite differences of F") {
  for (int seed = 0; seed < 5; ++seed) {
    const Solved s = SolveRandom(6, 4, 60 + seed, 0.5, 6.0);
    const PnePartials p = ComputePnePartials(s.env, s.x, s.beta, 1e-6);
    Eigen::MatrixXd system = p.y * p.z.transpose();
    system.diagonal() += p.d;
    Eigen::MatrixXd numeric(6, 6);
    for (int l = 0; l < 6; ++l) {
      numeric.col(l) = -testing::CentralDifference(
          [&](const Eigen::VectorXd& z) {
            return UtilityGradient(s.env, {z}, s.beta);
          },
          s.x.x, l, 1e-6 * s.x.x[l]);
    }
    CHECK(testing::RelErr(system, numeric) <= 1e-4);

    // B is -dF/dbeta.
    Eigen::MatrixXd db(6, 4);
    for (int j = 0; j < 4; ++j) {
      db.col(j) = -testing::CentralDifference(
          [&](const Eigen::VectorXd& b) {
            return UtilityGradient(s.env, s.x, BetaPolicy::Personalized(b));
          },
          s.beta.beta, j, 1e-6);
    }
    CHECK(testing::RelErr(p.b, -db) <= 1e-4);
  }
}

TEST_CASE("exact jacobian matches re-solved finite differences") {
  const Solved s = SolveRandom(10, 5, 1, 1.0, 4.0);
  const Eigen::MatrixXd exact =
      JacobianExact(ComputePnePartials(s.env, s.x, s.beta, 1e-6));
  Eigen::MatrixXd numeric(10, 5);
  const double h = 1e-4;
  for (int j = 0; j < 5; ++j) {
    numeric.col(j) = testing::CentralDifference(
        [&](const Eigen::VectorXd& b) {
          return SolvePne(s.env, BetaPolicy::Personalized(b), Tight())
              .x_star.x;
        },
        s.beta.beta, j, h);
  }
  CHECK(MaxRelativeError(exact, numeric, 1e-8) <= 1e-3);
}

TEST_CASE("symmetric environments have no beta sensitivity") {
  const Solved s = SolveIdentical();
  const PnePartials p = ComputePnePartials(s.env, s.x, s.beta, 1e-6);
  CHECK(p.b.isZero(0.0));
  CHECK(JacobianExact(p).isZero(0.0));
  const Eigen::VectorXd g =
      WelfareGradient(s.env, s.x, s.beta, 0.5, {1.0, 0}, 1e-6);
  CHECK(g.isZero(0.0));
  CHECK(WelfareGradient(s.env, s.x, s.beta, 0.5, {0.4, 3}, 1e-6).isZero(0.0));
  CHECK(WelfareGradientDense(s.env, s.x, s.beta, 0.5, 1e-6).isZero(0.0));
}

TEST_CASE("total production falls with beta at large beta") {
  for (int seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    Solved s{RandomEnvironment(20, 1, 1.5, 700 + seed),
             BetaPolicy::Homogeneous(8.0, 1),
             {}};
    s.x = SolvePne(s.env, s.beta, Tight()).x_star;
    const Eigen::MatrixXd jac =
        JacobianExact(ComputePnePartials(s.env, s.x, s.beta, 1e-6));
    CHECK(jac.sum() < 0.0);
  }
}

TEST_CASE("sketch contracts") {
  const Solved s = SolveRandom(8, 12, 2, 0.5, 5.0);
  const PnePartials p = ComputePnePartials(s.env, s.x, s.beta, 1e-6);

  SUBCASE("full rate is the identity") {
    const Sketch k = SketchMatrices(p, {1.0, 77});
    CHECK(k.y == p.y);
    CHECK(k.z == p.z);
    for (int j = 0; j < 12; ++j) CHECK(k.column_map[j] == j);
  }
  SUBCASE("half rate samples inside its support") {
    const Sketch k = SketchMatrices(p, {0.5, 5});
    CHECK(k.support.size() == 6);
    const std::set<int> support(k.support.begin(), k.support.end());
    CHECK(support.size() == 6);
    for (int j = 0; j < 12; ++j) {
      CHECK(support.count(k.column_map[j]) == 1);
      CHECK(k.y.col(j) == p.y.col(k.column_map[j]));
      CHECK(k.z.col(j) == p.z.col(k.column_map[j]));
    }
    const Sketch again = SketchMatrices(p, {0.5, 5});
    CHECK(again.column_map == k.column_map);
  }
  SUBCASE("sample size and rank") {
    for (double rate : {0.05, 0.1, 0.25, 0.5, 0.9}) {
      const SketchSpec spec{rate, 11};
      const int expected = std::max(1, static_cast<int>(std::ceil(rate * 12)));
      CHECK(spec.SampleSize(12) == expected);
      const Sketch k = SketchMatrices(p, spec);
      const Eigen::MatrixXd outer = k.y * k.z.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(outer);
      lu.setThreshold(1e-10);
      CHECK(lu.rank() <= expected);
      const LowRankUpdate compact = CompactUpdate(p, k);
      CHECK(compact.left.cols() <= expected);
      CHECK(testing::MaxAbs(compact.left * compact.right.transpose() - outer) <
            1e-12 * testing::MaxAbs(outer));
    }
  }
  SUBCASE("invalid rates") {
    CHECK_THROWS_AS(SketchMatrices(p, {0.0, 1}), ValidationError);
    CHECK_THROWS_AS(SketchMatrices(p, {1.5, 1}), ValidationError);
    CHECK_THROWS_AS(SketchMatrices(p, {NAN, 1}), ValidationError);
  }
}

TEST_CASE("Woodbury apply") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = 8, m = 3, k = 4;
  Eigen::VectorXd d(n);
  for (auto& v : d) v = 1.0 + std::abs(unif(rng));
  Eigen::MatrixXd y(n, m), z(n, m), rhs(n, k);
  for (auto* mat : {&y, &z, &rhs}) {
    for (Eigen::Index i = 0; i < mat->size(); ++i) mat->data()[i] = unif(rng);
  }
  SUBCASE("rank-zero update is a diagonal solve") {
    const Eigen::MatrixXd out =
        SmwApply(d, {Eigen::MatrixXd::Zero(n, m), z}, rhs);
    CHECK(testing::MaxAbs(out - d.cwiseInverse().asDiagonal() * rhs) < 1e-15);
  }
  SUBCASE("agrees with a dense solve") {
    Eigen::MatrixXd dense = y * z.transpose();
    dense.diagonal() += d;
    const Eigen::MatrixXd expected = dense.fullPivLu().solve(rhs);
    CHECK(testing::RelErr(SmwApply(d, {y, z}, rhs), expected) <= 1e-10);
  }
  SUBCASE("singular inner system is reported") {
    // D = 1 and Y = -Z with |z| = 1 make I + Z^T D^-1 Y vanish.
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd zz = Eigen::MatrixXd::Zero(n, 1);
    zz(0, 0) = 1.0;
    CHECK_THROWS_AS(SmwApply(ones, {-zz, zz}, rhs), NumericalError);
  }
}

TEST_CASE("Woodbury welfare gradient equals the dense path at full rate") {
  for (int seed = 0; seed < 6; ++seed) {
    const int n = 10 + 8 * seed, m = 3 + seed;
    const Solved s = SolveRandom(n, m, 80 + seed, 0.2, 7.0);
    const Eigen::VectorXd smw =
        WelfareGradient(s.env, s.x, s.beta, 0.5, {1.0, 0}, 1e-6);
    const Eigen::VectorXd dense =
        WelfareGradientDense(s.env, s.x, s.beta, 0.5, 1e-6);
    CHECK(RelativeErrorInf(smw, dense) <= 1e-8);
  }
}

TEST_CASE("satisfaction partials") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 9, m = 1 + trial % 6;
    const Environment env = RandomEnvironment(n, m, 1.5, 1000 + trial);
    Eigen::VectorXd x(n), b(m);
    for (auto& v : x) v = 0.01 + 4.0 * unif(rng);
    for (auto& v : b) v = 30.0 * unif(rng);
    const BetaPolicy beta = BetaPolicy::Personalized(b);
    const SatisfactionPartials s = ComputeSatisfactionPartials(env, {x}, beta);
    CHECK((s.du_dbeta.array() >= -1e-12).all());

    // Raw second-moment-minus-square form.
    const Eigen::MatrixXd p = testing::NaiveMatch(env.relevance, x, b);
    for (int j = 0; j < m; ++j) {
      const double t = env.relevance.col(j).dot(p.col(j));
      const double raw =
          env.relevance.col(j).cwiseAbs2().dot(p.col(j)) - t * t;
      CHECK(s.du_dbeta[j] == doctest::Approx(raw).epsilon(1e-9).scale(1e-6));
    }
    if (trial % 10 == 0) {
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd up = b, down = b;
        up[j] += 1e-6;
        down[j] -= 1e-6;
        const double fd = (testing::NaiveSatisfaction(env, x, up) -
                           testing::NaiveSatisfaction(env, x, down)) /
                          2e-6;
        CHECK(s.du_dbeta[j] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
      }
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd up = x, down = x;
        const double h = 1e-6 * x[i];
        up[i] += h;
        down[i] -= h;
        const double fd = (testing::NaiveSatisfaction(env, up, b) -
                           testing::NaiveSatisfaction(env, down, b)) /
                          (2 * h);
        CHECK(s.du_dx[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("welfare gradient matches re-solved finite differences of W") {
  for (int seed = 0; seed < 3; ++seed) {
    const Solved s = SolveRandom(10, 5, 40 + seed, 0.5, 5.0);
    for (double lambda : {0.0, 0.5}) {
      const Eigen::VectorXd analytic =
          WelfareGradient(s.env, s.x, s.beta, lambda, {1.0, 0}, 1e-6);
      Eigen::VectorXd numeric(5);
      for (int j = 0; j < 5; ++j) {
        numeric[j] = testing::CentralDifference(
            [&](const Eigen::VectorXd& b) {
              const BetaPolicy policy = BetaPolicy::Personalized(b);
              const auto x = SolvePne(s.env, policy, Tight()).x_star;
              return Eigen::VectorXd::Constant(
                  1, Welfare(s.env, x, policy, lambda).welfare);
            },
            s.beta.beta, j, 1e-4)[0];
      }
      CHECK(RelativeErrorInf(analytic, numeric) <= 1e-3);
    }
  }
}

}  // namespace
}  // namespace c4
