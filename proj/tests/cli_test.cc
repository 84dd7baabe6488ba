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

// Drives the c4 binary as a subprocess.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "c4/csv.h"
#include "doctest.h"
#include "json.hpp"
#include "test_support.h"

namespace c4 {
namespace {

namespace fs = std::filesystem;
using testing::FixturePath;
using testing::ReadFile;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run Invoke(const fs::path& dir, const std::string& args) {
  static int counter = 0;
  const std::string tag = std::to_string(counter++);
  const fs::path out = dir / ("stdout_" + tag);
  const fs::path err = dir / ("stderr_" + tag);
  const std::string command = std::string("'") + C4_CLI_PATH + "' " + args +
                              " > '" + out.string() + "' 2> '" +
                              err.string() + "'";
  const int status = std::system(command.c_str());
  Run run;
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.out = ReadFile(out);
  run.err = ReadFile(err);
  return run;
}

std::vector<std::vector<std::string>> CsvRows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// A seeded small synthetic environment written into `dir`.
std::string SmallEnv(const fs::path& dir, const std::string& sizes) {
  const std::string path = (dir / "small.json").string();
  REQUIRE(Invoke(dir, "gen-env --seed 3 " + sizes + " --out '" + path + "'")
              .code == 0);
  return path;
}

TEST_CASE("gen-env") {
  const fs::path dir = testing::ScratchDir("cli_gen_env");
  const Run a = Invoke(dir, "gen-env --kind synthetic --seed 7 --n 12 --m 30");
  const Run b = Invoke(dir, "gen-env --kind synthetic --seed 7 --n 12 --m 30");
  const Run c = Invoke(dir, "gen-env --kind synthetic --seed 8 --n 12 --m 30");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);

  const std::string path = (dir / "env.json").string();
  REQUIRE(Invoke(dir, "gen-env --seed 7 --out '" + path + "'").code == 0);
  const std::string first = ReadFile(path);
  REQUIRE(Invoke(dir, "gen-env --seed 7 --out '" + path + "'").code == 0);
  CHECK(ReadFile(path) == first);
  const nlohmann::json env = nlohmann::json::parse(first);
  CHECK(env["n"] == 200);
  CHECK(env["m"] == 1000);
  CHECK(env["relevance"].size() == 200);
  CHECK(env["relevance"][0].size() == 1000);
  CHECK(env["costs"].size() == 200);

  const Run ingest = Invoke(
      dir, "gen-env --kind ingest --users '" + FixturePath("users.csv") +
               "' --creators '" + FixturePath("creators.csv") +
               "' --costs 0.1,0.2,0.3");
  REQUIRE(ingest.code == 0);
  const nlohmann::json ingested = nlohmann::json::parse(ingest.out);
  CHECK(ingested["n"] == 3);
  CHECK(ingested["m"] == 4);
  CHECK(ingested["costs"][2]["c"] == 0.3);

  const Run mismatch = Invoke(
      dir, "gen-env --kind ingest --users '" + FixturePath("users.csv") +
               "' --creators '" + FixturePath("creators_2d.csv") + "'");
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("dimension") != std::string::npos);
  CHECK(Invoke(dir, "gen-env --n 0").code == 1);
  CHECK(Invoke(dir, "gen-env --kind other").code == 1);
}

TEST_CASE("solve") {
  const fs::path dir = testing::ScratchDir("cli_solve");
  const std::string tullock = FixturePath("tullock_n2.json");
  const Run a = Invoke(dir, "solve --env '" + tullock + "' --beta 0");
  const Run b = Invoke(dir, "solve --env '" + tullock + "' --beta 0");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.err == b.err);
  const nlohmann::json j = nlohmann::json::parse(a.out);
  CHECK(j["solve"]["converged"] == true);
  for (const auto& x : j["solve"]["x_star"]) {
    CHECK(std::abs(x.get<double>() - 1.0) < 1e-4);
  }
  for (const char* key : {"U=", "V=", "W="}) {
    CHECK(a.err.find(key) != std::string::npos);
  }

  const Run zero = Invoke(dir, "solve --env '" + tullock +
                                   "' --beta 2 --lambda 0 --random-init "
                                   "--seed 4 --tol 1e-8");
  REQUIRE(zero.code == 0);
  const nlohmann::json w = nlohmann::json::parse(zero.out)["welfare"];
  CHECK(w["W"] == w["U"]);
  CHECK(Invoke(dir, "solve --env '" + tullock + "' --beta 2 --random-init "
                    "--seed 4")
            .out ==
        Invoke(dir, "solve --env '" + tullock + "' --beta 2 --random-init "
                    "--seed 4")
            .out);

  const std::string beta_file = (dir / "beta.json").string();
  testing::WriteFile(beta_file, "[0.0]");
  CHECK(Invoke(dir, "solve --env '" + tullock + "' --beta-file '" +
                        beta_file + "'")
            .out == a.out);

  const Run negative = Invoke(dir, "solve --env '" + tullock + "' --beta -1");
  CHECK(negative.code == 1);
  CHECK_FALSE(negative.err.empty());
  CHECK(Invoke(dir, "solve --env '" + (dir / "missing.json").string() + "'")
            .code == 1);
  // One iteration cannot reach the tolerance from a random start.
  CHECK(Invoke(dir, "solve --env '" + tullock +
                        "' --beta 1 --random-init --max-iter 1")
            .code == 2);
}

TEST_CASE("sweep") {
  const fs::path dir = testing::ScratchDir("cli_sweep");
  const std::string env = SmallEnv(dir, "--n 20 --m 1");
  const std::string args = "sweep --env '" + env + "' --grid 0:10:0.5 --tol 1e-4";
  const Run a = Invoke(dir, args);
  const Run b = Invoke(dir, args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto rows = CsvRows(a.out);
  REQUIRE(rows.size() == 22);
  CHECK(rows[0] == std::vector<std::string>{"beta", "U", "V", "W",
                                            "converged"});
  for (std::size_t k = 2; k < rows.size(); ++k) {
    CHECK(std::stod(rows[k][1]) > std::stod(rows[k - 1][1]));
  }

  const std::string detail = (dir / "detail.json").string();
  REQUIRE(Invoke(dir, "sweep --env '" + env + "' --grid 1,2 --detail-out '" +
                          detail + "'")
              .code == 0);
  const nlohmann::json d = nlohmann::json::parse(ReadFile(detail));
  REQUIRE(d.size() == 2);
  CHECK(d[0].contains("x"));
  CHECK(d[0].contains("pi"));

  const std::string repeats =
      "sweep --repeats 3 --seeds 0..2 --n 10 --m 20 --grid 0:2:1";
  const Run r = Invoke(dir, repeats);
  REQUIRE(r.code == 0);
  CHECK(r.out == Invoke(dir, repeats).out);
  const auto table = CsvRows(r.out);
  REQUIRE(table.size() == 4);
  CHECK(table[0] == std::vector<std::string>{"beta", "U_mean", "U_std",
                                             "V_mean", "V_std", "W_mean",
                                             "W_std", "failed"});
  CHECK(std::stod(table[1][2]) > 0.0);
  CHECK(table[1][7] == "0");

  CHECK(Invoke(dir, "sweep --env '" + env + "' --grid 0:-1:1").code == 1);
}

TEST_CASE("optimize") {
  const fs::path dir = testing::ScratchDir("cli_optimize");
  const std::string env = SmallEnv(dir, "--n 20 --m 40 --clusters 5");
  auto run = [&](const std::string& extra, const std::string& tag) {
    const std::string beta = (dir / ("beta_" + tag + ".json")).string();
    const std::string trace = (dir / ("trace_" + tag + ".json")).string();
    const Run r = Invoke(dir, "optimize --env '" + env + "' --iters 3 " +
                                  extra + " --beta-out '" + beta +
                                  "' --trace-json '" + trace + "'");
    return std::make_tuple(r, ReadFile(beta), ReadFile(trace));
  };
  const auto [a, a_beta, a_trace] = run("--eta 20 --rate 0.5 --seed 9", "a");
  const auto [b, b_beta, b_trace] = run("--eta 20 --rate 0.5 --seed 9", "b");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a_beta == b_beta);
  CHECK(a_trace == b_trace);
  const std::string header =
      "iter,U,V,W,residual,solver_iters,beta_mean,beta_min,beta_max";
  CHECK(a.out.rfind(header + "\n", 0) == 0);
  CHECK(CsvRows(a.out).size() == 5);
  CHECK(nlohmann::json::parse(a_beta)["beta"].size() == 40);

  const auto [h, h_beta, h_trace] = run("--mode homogeneous --eta 0.5", "h");
  REQUIRE(h.code == 0);
  const nlohmann::json hb = nlohmann::json::parse(h_beta);
  CHECK(hb["mode"] == "homogeneous");
  for (const auto& v : hb["beta"]) CHECK(v == hb["beta"][0]);

  const auto [l, l_beta, l_trace] = run("--eta 20 --lambda 0.1", "l");
  REQUIRE(l.code == 0);
  CHECK(l.out.rfind(header + "\n", 0) == 0);
  const nlohmann::json lt = nlohmann::json::parse(l_trace);
  const nlohmann::json at = nlohmann::json::parse(a_trace);
  CHECK(lt["final_report"]["lambda"] == 0.1);
  for (const auto& [key, value] : at.items()) CHECK(lt.contains(key));

  const auto [f, f_beta, f_trace] = run("--eta 20 --rate 0.5 --seed 9 --fixed-diagonal", "f");
  CHECK(f.code == 0);
  CHECK(f_beta != a_beta);

  CHECK(Invoke(dir, "optimize --env '" + env + "' --rate 0").code == 1);
  CHECK(Invoke(dir, "optimize --env '" + env + "' --mode sideways").code == 1);
  CHECK(Invoke(dir, "optimize --env '" + env + "' --max-iter 1").code == 2);
}

TEST_CASE("check") {
  const fs::path dir = testing::ScratchDir("cli_check");
  const Run a = Invoke(dir, "check");
  REQUIRE(a.code == 0);
  CHECK(a.out == Invoke(dir, "check").out);
  for (const char* name : {"gradient", "jacobian", "smw", "dsc"}) {
    CHECK(a.out.find(std::string("PASS ") + name) != std::string::npos);
  }
  const Run fault = Invoke(dir, "check --inject-fault du-dbeta-sign");
  CHECK(fault.code != 0);
  CHECK(fault.out.find("FAIL gradient") != std::string::npos);
  const Run skipped = Invoke(dir, "check --skip smw");
  CHECK(skipped.code == 0);
  CHECK(skipped.out.find("smw") == std::string::npos);
  CHECK(Invoke(dir, "check --skip nonsense").code == 1);
}

TEST_CASE("usage errors") {
  const fs::path dir = testing::ScratchDir("cli_usage");
  CHECK(Invoke(dir, "--help").code == 0);
  CHECK(Invoke(dir, "").code == 1);
  CHECK(Invoke(dir, "frobnicate").code == 1);
  CHECK(Invoke(dir, "solve").code == 1);
}

}  // namespace
}  // namespace c4
