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

// dualmpc command-line driver: solve-once, simulate, benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualmpc/harness.hpp"
#include "dualmpc/rng.hpp"

namespace fs = std::filesystem;
using namespace dmpc;

namespace
{

  std::ofstream open_out(const fs::path &p)
  {
    std::ofstream os(p, std::ios::binary);
    require(static_cast<bool>(os), "cannot write '" + p.string() + "'");
    return os;
  }

  std::vector<double> to_std(const VectorXd &v) { return {v.data(), v.data() + v.size()}; }

  void write_predictions(const fs::path &p, const ControlDecision &d)
  {
    std::ofstream os = open_out(p);
    const int nx = d.predicted.empty() ? 0 : static_cast<int>(d.predicted[0][0].size());
    os << "prediction,group,t";
    for (int i = 0; i < nx; ++i)
      os << ",x_" << i;
    os << '\n';
    for (std::size_t m = 0; m < d.predicted.size(); ++m)
      for (std::size_t t = 0; t < d.predicted[m].size(); ++t)
      {
        os << m << ',' << d.prediction_group[m] << ',' << t;
        for (int i = 0; i < nx; ++i)
          os << ',' << format_double(d.predicted[m][t](i));
        os << '\n';
      }
  }

  int solve_once(const ScenarioConfig &sc, const std::string &controller, std::uint64_t seed, const fs::path &out)
  {
    const ParamAffineModel model = sc.build_model();
    const ControllerSpec &spec = sc.controller(controller);
    const ControlDecision d = controller_step(model, sc.cost, spec.config, sc.initial_state, sc.prior,
                                              derive_seed(seed, kPurposeController, 0));
    fs::create_directories(out);
    if (d.shape)
    {
      std::ofstream os = open_out(out / "tree.txt");
      write_tree_dump(os, *d.shape, d.tree);
    }
    write_predictions(out / "predictions.csv", d);
    {
      std::ofstream os = open_out(out / "trace.csv");
      write_trace_csv(os, d.stats);
    }
    nlohmann::ordered_json j;
    j["controller"] = spec.label;
    j["seed"] = seed;
    j["u0"] = to_std(d.u0);
    j["decision"] = to_std(d.decision);
    j["iterations"] = d.stats.iterations;
    j["evaluations"] = d.stats.evaluations;
    j["termination"] = d.stats.termination;
    j["objective"] = d.stats.objective_trace.empty() ? 0.0 : d.stats.objective_trace.back();
    j["final_pg_norm"] = d.stats.final_pg_norm;
    auto leaves = nlohmann::ordered_json::array();
    for (const auto &b : d.leaf_beliefs)
    {
      std::vector<double> cov(b.cov.data(), b.cov.data() + b.cov.size());
      leaves.push_back({{"mean", to_std(b.mean)}, {"cov", cov}});
    }
    j["leaf_beliefs"] = leaves;
    open_out(out / "decision.json") << j.dump(2) << '\n';
    std::printf("%s u0 =", spec.label.c_str());
    for (Eigen::Index i = 0; i < d.u0.size(); ++i)
      std::printf(" %.6g", d.u0(i));
    std::printf("  (%d iterations, %s)\n", d.stats.iterations, d.stats.termination.c_str());
    return 0;
  }

  int simulate(const ScenarioConfig &sc, const std::string &controller, std::uint64_t seed, const fs::path &out)
  {
    const ParamAffineModel model = sc.build_model();
    const TrajectoryRecord rec = run_closed_loop(sc, sc.controller(controller), seed);
    fs::create_directories(out);
    {
      std::ofstream os = open_out(out / "trajectory.csv");
      write_trajectory_csv(os, {rec}, model.nx(), model.nu(), model.nb());
    }
    nlohmann::ordered_json j;
    j["controller"] = rec.controller;
    j["seed"] = rec.seed;
    j["theta_true"] = to_std(rec.theta_true);
    j["steps"] = rec.steps.size();
    j["k_goal"] = rec.k_goal ? nlohmann::ordered_json(*rec.k_goal) : nullptr;
    j["aborted"] = rec.aborted;
    j["error"] = rec.error;
    open_out(out / "record.json") << j.dump(2) << '\n';
    std::printf("%s seed %llu: %zu rows%s\n", rec.controller.c_str(), static_cast<unsigned long long>(seed),
                rec.steps.size(), rec.aborted ? (", aborted: " + rec.error).c_str() : "");
    return 0;
  }

  int benchmark(const ScenarioConfig &sc, const fs::path &out)
  {
    const BenchmarkResult res = run_benchmark(sc);
    write_benchmark(res, sc, out.string());
    for (const auto &c : res.summary.controllers)
    {
      std::printf("%-8s runs=%zu failures=%d aborted=%d", c.controller.c_str(), c.seeds.size(), c.failures,
                  c.aborted);
      if (c.median)
        std::printf(" median_k_goal=%g", *c.median);
      std::printf("\n");
    }
    return 0;
  }

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Approximate dual stochastic MPC: single solves, closed-loop runs and benchmark sweeps"};
  app.require_subcommand(1);

  std::string config_path, controller, out_dir;
  std::uint64_t seed = 0;
  int seeds = 0, workers = 0;
  bool timing = false;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  };
  auto *once = app.add_subcommand("solve-once", "One MPC solve from the initial state; dumps tree and decision");
  auto *sim = app.add_subcommand("simulate", "One closed-loop run");
  auto *bench = app.add_subcommand("benchmark", "Full sweep over seeds and controllers");
  for (auto *sub : {once, sim})
  {
    add_common(sub);
    sub->add_option("--controller", controller, "Controller label or kind (dmpc|cempc|asmpc)");
    sub->add_option("--seed", seed, "Run seed (default: first configured seed)");
  }
  add_common(bench);
  bench->add_option("--seeds", seeds, "Use seeds 0..n-1 instead of the configured list")->check(CLI::PositiveNumber);
  bench->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);
  bench->add_option("--controller", controller, "Restrict to one controller");
  bench->add_flag("--timing", timing, "Record wall-clock solve times");

  CLI11_PARSE(app, argc, argv);

  try
  {
    ScenarioConfig sc = load_scenario(config_path);
    const fs::path out = out_dir.empty() ? fs::path(sc.output_dir) : fs::path(out_dir);
    const bool seed_given = (once->parsed() && once->count("--seed")) || (sim->parsed() && sim->count("--seed"));
    if (!seed_given)
      seed = sc.seeds.front();
    if (controller.empty())
      controller = sc.controllers.front().label;
    if (once->parsed())
      return solve_once(sc, controller, seed, out);
    if (sim->parsed())
      return simulate(sc, controller, seed, out);
    if (seeds > 0)
    {
      sc.seeds.clear();
      for (int i = 0; i < seeds; ++i)
        sc.seeds.push_back(static_cast<std::uint64_t>(i));
    }
    if (workers > 0)
      sc.workers = workers;
    if (timing)
      sc.timing = true;
    if (bench->count("--controller"))
      sc.controllers = {sc.controller(controller)};
    return benchmark(sc, out);
  }
  catch (const ContractError &e)
  {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  catch (const std::exception &e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
