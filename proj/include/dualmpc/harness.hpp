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

// Closed-loop simulation, benchmark sweeps, configuration and persistence.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualmpc/control.hpp"

namespace dmpc
{

  struct ControllerSpec
  {
    std::string label;
    ControllerConfig config;
  };

  /// First time index at which x[index] > threshold ends the run.
  struct TargetPredicate
  {
    int index = 0;
    double threshold = 0.0;
  };

  struct ScenarioConfig
  {
    std::string model_name;
    ModelParams model_params;
    GaussianBelief prior;
    bool sample_true_param = false;
    VectorXd true_param; ///< used when !sample_true_param
    VectorXd initial_state;
    int T_sim = 10;
    std::optional<TargetPredicate> target;
    StageCost cost;
    InputBounds bounds;
    std::vector<ControllerSpec> controllers;
    std::vector<std::uint64_t> seeds;
    int workers = 1;
    std::string output_dir = "out";
    int histogram_cap = 40;
    bool timing = false;

    ParamAffineModel build_model() const;
    /// Controller by label or by kind name; ContractError if absent.
    const ControllerSpec &controller(const std::string &name) const;
  };

  /// Parse and validate; unknown keys and malformed values raise ContractError.
  ScenarioConfig parse_scenario(const std::string &json_text);
  ScenarioConfig load_scenario(const std::string &path);

  struct TrajectoryStep
  {
    int k = 0;
    VectorXd x;
    VectorXd u; ///< NaN on the final row
    GaussianBelief belief;
    double stage_cost = 0.0; ///< terminal cost on the final row
    int solve_iters = 0;
    double solve_ms = 0.0;
  };

  struct TrajectoryRecord
  {
    std::uint64_t seed = 0;
    std::string controller;
    VectorXd theta_true;
    std::vector<TrajectoryStep> steps;
    bool aborted = false;
    std::string error;
    std::optional<int> k_goal;
  };

  /// Child seeds for one run: hash(seed, purpose, step).
  inline constexpr const char *kPurposeController = "controller";
  inline constexpr const char *kPurposeNoise = "process_noise";
  inline constexpr const char *kPurposeTheta = "theta_true";

  VectorXd draw_true_param(const ScenarioConfig &sc, std::uint64_t seed);

  TrajectoryRecord run_closed_loop(const ScenarioConfig &sc, const ControllerSpec &ctrl, std::uint64_t seed);

  /// First k with x_k[index] > threshold.
  std::optional<int> k_goal(const std::vector<VectorXd> &states, const TargetPredicate &target);
  std::optional<int> k_goal(const TrajectoryRecord &rec, const TargetPredicate &target);

  struct ControllerSummary
  {
    std::string controller;
    std::vector<std::uint64_t> seeds;
    std::vector<std::optional<int>> k_goal;
    std::vector<int> histogram; ///< cap unit bins, then one overflow bin; empty without a target
    int failures = 0; ///< overflow-bin runs, or aborted runs without a target
    int aborted = 0;
    /// Quantiles of capped k_goal; absent without a target predicate.
    std::optional<double> median;
    std::optional<double> q25;
    std::optional<double> q75;
    double mean_iterations = 0.0;
    std::optional<double> mean_solve_ms;
  };

  struct BenchmarkSummary
  {
    int histogram_cap = 40;
    std::vector<ControllerSummary> controllers;
  };

  struct BenchmarkResult
  {
    std::vector<TrajectoryRecord> runs; ///< controller-major, seeds ascending
    BenchmarkSummary summary;
  };

  ControllerSummary summarize(const std::string &controller, const std::vector<TrajectoryRecord> &runs,
                              const std::optional<TargetPredicate> &target, int cap, bool timing);

  BenchmarkResult run_benchmark(const ScenarioConfig &sc);

  std::string csv_header(int nx, int nu, int nb);
  void write_trajectory_csv(std::ostream &os, const std::vector<TrajectoryRecord> &runs, int nx, int nu, int nb);
  std::string summary_json(const BenchmarkSummary &s);

  /// Writes runs.csv and summary.json into `dir`.
  void write_benchmark(const BenchmarkResult &res, const ScenarioConfig &sc, const std::string &dir);

  /// Type-7 sample quantile.
  double quantile(std::vector<double> v, double p);

  /// 17 significant digits; NaN as "nan".
  std::string format_double(double v);

} // namespace dmpc
