/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dualmpc/harness.hpp"
#include "dualmpc/rng.hpp"

using namespace dmpc;
using json = nlohmann::json;

namespace
{

  json scalar_json()
  {
    return json::parse(R"({
      "name": "scalar",
      "model": {"name": "scalar_gain", "params": {"noise_var": 0.1}},
      "prior": {"mean": [1.0], "cov": [[10.0]]},
      "true_param": {"policy": "fixed", "value": [3.0]},
      "initial_state": [5.0],
      "T_sim": 6,
      "cost": {"kind": "quadratic", "Q": [[10.0]], "R": [[0.01]]},
      "controllers": [
        {"kind": "dmpc", "N": 5, "L": 1, "Ns": 4},
        {"kind": "cempc", "N": 5},
        {"kind": "asmpc", "label": "sampled", "N": 5, "L": 1, "Ns": 4}
      ],
      "seeds": {"start": 3, "count": 4}
    })");
  }

  json car_json()
  {
    return json::parse(R"({
      "name": "car",
      "model": {"name": "mountain_car", "params": {"Ts": 7.0, "noise_var": 1e-6}},
      "prior": {"mean": [0.002, 0.0025], "cov": [[1e-6, 0.0], [0.0, 1e-6]]},
      "true_param": {"policy": "sample_prior"},
      "initial_state": [-0.5, 0.0],
      "T_sim": 12,
      "target": {"index": 0, "threshold": 0.6},
      "cost": {"kind": "linear", "c": [-1.0, 0.0]},
      "controllers": [{"kind": "cempc", "N": 8}, {"kind": "dmpc", "N": 6, "L": 1, "Ns": 3}],
      "seeds": [0, 1, 2]
    })");
  }

  std::string error_of(const json &j)
  {
    try
    {
      parse_scenario(j.dump());
    }
    catch (const ContractError &e)
    {
      return e.what();
    }
    return "";
  }

  std::string csv_of(const BenchmarkResult &r, const ScenarioConfig &sc)
  {
    std::ostringstream os;
    write_trajectory_csv(os, r.runs, static_cast<int>(sc.initial_state.size()), sc.bounds.lower.size(),
                         sc.prior.dim());
    return os.str();
  }

} // namespace

TEST_CASE("scenario parsing fills defaults")
{
  const ScenarioConfig sc = parse_scenario(scalar_json().dump());
  CHECK(sc.model_name == "scalar_gain");
  CHECK(sc.seeds == std::vector<std::uint64_t>{3, 4, 5, 6});
  CHECK(sc.bounds.lower(0) == -10.0);
  CHECK(sc.bounds.upper(0) == 10.0);
  CHECK(sc.histogram_cap == 40);
  CHECK(!sc.target);
  CHECK(!sc.sample_true_param);
  CHECK(sc.cost.Q_terminal(0, 0) == 10.0);
  CHECK(sc.controller("cempc").config.kind == ControllerKind::CEMPC);
  CHECK(sc.controller("sampled").config.kind == ControllerKind::ASMPC);
  CHECK(sc.controller("dmpc").config.tail_mode == TailMode::Taylor);
  CHECK_THROWS_AS(sc.controller("mpc"), ContractError);

  const ScenarioConfig car = parse_scenario(car_json().dump());
  CHECK(car.bounds.lower(0) == -1.0);
  REQUIRE(car.target);
  CHECK(car.target->threshold == 0.6);
  CHECK(car.build_model().nb() == 2);
}

TEST_CASE("scenario parsing rejects malformed input")
{
  json j = scalar_json();
  j["speed"] = 3;
  CHECK(error_of(j).find("speed") != std::string::npos);

  j = scalar_json();
  j["controllers"][0]["horizon"] = 3;
  CHECK(error_of(j).find("horizon") != std::string::npos);

  j = scalar_json();
  j["T_sim"] = "ten";
  CHECK(error_of(j).find("T_sim") != std::string::npos);

  j = scalar_json();
  j["seeds"] = {1, 2, 1};
  CHECK(!error_of(j).empty());

  j = scalar_json();
  j["controllers"][0]["L"] = 5;
  CHECK(!error_of(j).empty());

  j = scalar_json();
  j["prior"]["cov"] = {{-1.0}};
  CHECK(!error_of(j).empty());

  j = scalar_json();
  j["model"]["name"] = "pendulum";
  CHECK(!error_of(j).empty());

  j = scalar_json();
  j["initial_state"] = {1.0, 2.0};
  CHECK(!error_of(j).empty());

  j = scalar_json();
  j["true_param"] = {{"policy", "sample_prior"}, {"value", {3.0}}};
  CHECK(!error_of(j).empty());

  CHECK_THROWS_AS(parse_scenario("{ not json"), ContractError);
}

TEST_CASE("goal index")
{
  const TargetPredicate t{0, 0.6};
  const std::vector<VectorXd> xs = {VectorXd::Constant(1, -0.5), VectorXd::Constant(1, -0.6),
                                    VectorXd::Constant(1, 0.1), VectorXd::Constant(1, 0.65)};
  CHECK(k_goal(xs, t) == 3);
  CHECK(!k_goal(std::vector<VectorXd>(xs.begin(), xs.end() - 1), t).has_value());
  CHECK(k_goal(std::vector<VectorXd>{VectorXd::Constant(1, 0.7)}, t) == 0);
  // Strict inequality.
  CHECK(!k_goal(std::vector<VectorXd>{VectorXd::Constant(1, 0.6)}, t).has_value());
}

TEST_CASE("type-7 quantiles and number formatting")
{
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
  CHECK(quantile({1, 2, 3, 4}, 0.75) == 3.25);
  CHECK(quantile({7}, 0.25) == 7.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 0.0) == 1.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 1.0) == 5.0);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
}

TEST_CASE("trajectory CSV header")
{
  CHECK(csv_header(2, 1, 2) ==
        "run_seed,controller,k,x_0,x_1,u_0,belief_mean_0,belief_mean_1,belief_cov_0,belief_cov_1,"
        "belief_cov_2,belief_cov_3,stage_cost,solve_iters,solve_ms");
}

TEST_CASE("closed-loop record structure")
{
  const ScenarioConfig sc = parse_scenario(scalar_json().dump());
  const TrajectoryRecord r = run_closed_loop(sc, sc.controller("dmpc"), 3);
  REQUIRE(!r.aborted);
  REQUIRE(r.steps.size() == 7);
  CHECK(r.theta_true(0) == 3.0);
  for (std::size_t k = 0; k < r.steps.size(); ++k)
  {
    const TrajectoryStep &s = r.steps[k];
    CHECK(s.k == static_cast<int>(k));
    CHECK(s.solve_ms == 0.0);
    if (k + 1 < r.steps.size())
    {
      CHECK(sc.bounds.contains(s.u));
      CHECK(s.stage_cost == doctest::Approx(10 * s.x(0) * s.x(0) + 0.01 * s.u(0) * s.u(0)));
      // Posterior variance never grows under a linear-Gaussian update.
      CHECK(r.steps[k + 1].belief.cov(0, 0) <= s.belief.cov(0, 0));
    }
    else
    {
      CHECK(std::isnan(s.u(0)));
      CHECK(s.stage_cost == doctest::Approx(10 * s.x(0) * s.x(0)));
    }
  }
  CHECK(r.steps[0].belief.mean(0) == 1.0);
  CHECK(r.steps[0].x(0) == 5.0);

  // Replaying the first step outside the loop reproduces the recorded input and successor.
  const ParamAffineModel m = sc.build_model();
  ControllerConfig cfg = sc.controller("dmpc").config;
  cfg.bounds = sc.bounds;
  const ControlDecision d =
      controller_step(m, sc.cost, cfg, sc.initial_state, sc.prior, derive_seed(3, kPurposeController, 0));
  CHECK(d.u0(0) == r.steps[0].u(0));
  std::mt19937_64 gen(derive_seed(3, kPurposeNoise, 0));
  const VectorXd w = m.noise_chol() * standard_normal(gen, m.nw());
  const VectorXd x1 = eval_step_truth<double>(m, sc.initial_state, d.u0, r.theta_true, w);
  CHECK(x1(0) == r.steps[1].x(0));
}

TEST_CASE("CE-MPC does not learn")
{
  const ScenarioConfig sc = parse_scenario(scalar_json().dump());
  const TrajectoryRecord r = run_closed_loop(sc, sc.controller("cempc"), 4);
  for (const auto &s : r.steps)
  {
    CHECK(s.belief.mean(0) == 1.0);
    CHECK(s.belief.cov(0, 0) == 10.0);
  }
}

TEST_CASE("sampled true parameter depends only on the seed")
{
  const ScenarioConfig sc = parse_scenario(car_json().dump());
  const VectorXd a = draw_true_param(sc, 5), b = draw_true_param(sc, 5), c = draw_true_param(sc, 6);
  CHECK(a == b);
  CHECK(a != c);
  const TrajectoryRecord r1 = run_closed_loop(sc, sc.controllers[0], 5);
  const TrajectoryRecord r2 = run_closed_loop(sc, sc.controllers[1], 5);
  CHECK(r1.theta_true == a);
  CHECK(r2.theta_true == a);
}

TEST_CASE("target ends the run and sets the goal index")
{
  const ScenarioConfig sc = parse_scenario(car_json().dump());
  const TrajectoryRecord r = run_closed_loop(sc, sc.controllers[0], 0);
  REQUIRE(!r.aborted);
  if (r.k_goal)
  {
    CHECK(static_cast<int>(r.steps.size()) == *r.k_goal + 1);
    CHECK(r.steps.back().x(0) > 0.6);
    for (std::size_t k = 0; k + 1 < r.steps.size(); ++k)
      CHECK(r.steps[k].x(0) <= 0.6);
  }
  else
  {
    CHECK(static_cast<int>(r.steps.size()) == sc.T_sim + 1);
  }
  CHECK(std::isnan(r.steps.back().u(0)));
}

TEST_CASE("summaries from synthetic records")
{
  auto rec = [](std::uint64_t seed, std::optional<int> k, bool aborted = false) {
    TrajectoryRecord r;
    r.seed = seed;
    r.controller = "c";
    r.k_goal = k;
    r.aborted = aborted;
    TrajectoryStep s;
    s.u = VectorXd::Constant(1, 0.0);
    s.solve_iters = 4;
    r.steps.push_back(s);
    return r;
  };
  const std::vector<TrajectoryRecord> runs = {rec(0, 1), rec(1, 2), rec(2, std::nullopt), rec(3, 7), rec(4, 2),
                                              rec(5, std::nullopt, true)};
  const ControllerSummary s = summarize("c", runs, TargetPredicate{0, 0.6}, 5, false);
  CHECK(s.histogram == std::vector<int>{0, 1, 2, 0, 0, 3});
  CHECK(s.failures == 3);
  CHECK(s.aborted == 1);
  CHECK(*s.median == 3.5);
  CHECK(*s.q25 == 2.0);
  CHECK(*s.q75 == 5.0);
  CHECK(s.mean_iterations == 4.0);
  CHECK(!s.mean_solve_ms);

  const ControllerSummary n = summarize("c", runs, std::nullopt, 5, true);
  CHECK(n.histogram.empty());
  CHECK(n.failures == 1);
  CHECK(!n.median);
  CHECK(n.mean_solve_ms == 0.0);

  const ControllerSummary one = summarize("c", {rec(9, 4)}, TargetPredicate{0, 0.6}, 5, false);
  CHECK(*one.median == 4.0);
  CHECK(*one.q25 == 4.0);
}

TEST_CASE("benchmark output is deterministic and independent of worker count")
{
  ScenarioConfig sc = parse_scenario(car_json().dump());
  const BenchmarkResult a = run_benchmark(sc);
  sc.workers = 3;
  const BenchmarkResult b = run_benchmark(sc);
  CHECK(csv_of(a, sc) == csv_of(b, sc));
  CHECK(summary_json(a.summary) == summary_json(b.summary));

  REQUIRE(a.runs.size() == 6);
  CHECK(a.runs[0].controller == "cempc");
  CHECK(a.runs[3].controller == "dmpc");
  for (int i = 0; i < 3; ++i)
    CHECK(a.runs[i].seed == static_cast<std::uint64_t>(i));

  const json j = json::parse(summary_json(a.summary));
  CHECK(j["histogram_cap"] == 40);
  CHECK(j["bin_labels"].size() == 41);
  CHECK(j["bin_labels"][40] == ">=40");
  for (const auto &c : j["controllers"])
  {
    int total = 0;
    for (int h : c["histogram"])
      total += h;
    CHECK(total == 3);
    CHECK(c["seeds"].size() == 3);
  }

  const std::string csv = csv_of(a, sc);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == csv_header(2, 1, 2));
  std::size_t rows = 0;
  for (const auto &r : a.runs)
    rows += r.steps.size();
  std::size_t seen = 0;
  while (std::getline(is, line))
  {
    ++seen;
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
  }
  CHECK(seen == rows);
}

TEST_CASE("benchmark files")
{
  const ScenarioConfig sc = parse_scenario(scalar_json().dump());
  ScenarioConfig small = sc;
  small.controllers = {sc.controller("cempc")};
  const BenchmarkResult r = run_benchmark(small);
  const auto dir = std::filesystem::temp_directory_path() / "dualmpc_harness_test";
  std::filesystem::remove_all(dir);
  write_benchmark(r, small, dir.string());
  std::ifstream csv(dir / "runs.csv"), sum(dir / "summary.json");
  REQUIRE(csv.good());
  REQUIRE(sum.good());
  std::stringstream ss;
  ss << csv.rdbuf();
  CHECK(ss.str() == csv_of(r, small));
  const json j = json::parse(sum);
  CHECK(j["controllers"][0]["controller"] == "cempc");
  CHECK(j["controllers"][0]["histogram"].empty());
  CHECK(j["controllers"][0]["median"].is_null());
  std::filesystem::remove_all(dir);
}
