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

// Receding-horizon controllers: dual (scenario tree with in-prediction
// learning), certainty-equivalent, and adaptive sampled.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualmpc/nlp.hpp"

namespace dmpc
{

  enum class ControllerKind
  {
    DMPC,
    CEMPC,
    ASMPC
  };

  std::string to_string(ControllerKind k);
  ControllerKind controller_kind_from_string(const std::string &s);

  struct ControllerConfig
  {
    ControllerKind kind = ControllerKind::DMPC;
    int N = 15;
    int L = 3; ///< dual horizon, D-MPC only
    int Ns = 5;
    TailMode tail_mode = TailMode::Taylor;
    InputBounds bounds;
    SolverOptions solver;
    bool warm_start = true;

    void validate(int nu) const;
    /// Decision layout of this controller's optimization problem.
    DecisionLayout layout(int nu) const;
    /// Number of sampled scenarios drawn per solve (aS-MPC: Ns^L).
    int scenario_count() const;
  };

  struct ControlDecision
  {
    VectorXd u0;
    VectorXd decision;
    DecisionLayout layout;
    SolveStats stats;

    /// D-MPC: tree at the optimum and its shape; empty otherwise.
    std::optional<TreeShape> shape;
    TreeState tree;
    /// Predicted state trajectories over the horizon (N+1 states each): one
    /// per leaf for D-MPC, per scenario for aS-MPC, a single one for CE-MPC.
    std::vector<std::vector<VectorXd>> predicted;
    /// Index of the first-level tree branch each prediction descends from (D-MPC), else 0.
    std::vector<int> prediction_group;
    std::vector<GaussianBelief> leaf_beliefs;
  };

  /// Fixed standard-normal draws: `count` pairs of (z_theta[nb], z_w[nw_total]).
  std::vector<BaseSample> draw_base_samples(int count, int nb, int nw_total, std::uint64_t seed);

  /// Initial decision vector: zeros without a compatible previous solution;
  /// otherwise per-depth mean inputs shifted one step forward in time.
  VectorXd warm_start(const ControlDecision *prev, const DecisionLayout &layout, const InputBounds &bounds);

  ControlDecision dmpc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                            const VectorXd &x, const GaussianBelief &belief, std::uint64_t step_seed,
                            const ControlDecision *prev = nullptr);

  /// D-MPC solve with explicitly supplied edge samples.
  ControlDecision dmpc_step_with_samples(const ParamAffineModel &model, const StageCost &cost,
                                         const ControllerConfig &config, const VectorXd &x,
                                         const GaussianBelief &belief, const std::vector<BaseSample> &samples,
                                         const ControlDecision *prev = nullptr);

  /// Deterministic rollout at the belief mean without noise.
  ControlDecision cempc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                             const VectorXd &x, const GaussianBelief &belief, const ControlDecision *prev = nullptr);

  ControlDecision asmpc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                             const VectorXd &x, const GaussianBelief &belief, std::uint64_t step_seed,
                             const ControlDecision *prev = nullptr);

  /// aS-MPC solve with explicit scenarios; z_w holds N*nw entries, time-major.
  ControlDecision asmpc_step_with_samples(const ParamAffineModel &model, const StageCost &cost,
                                          const ControllerConfig &config, const VectorXd &x,
                                          const GaussianBelief &belief, const std::vector<BaseSample> &scenarios,
                                          const ControlDecision *prev = nullptr);

  /// Sample-average cost of one shared input sequence over fixed scenarios.
  Objective assemble_sampled_objective(const ParamAffineModel &model, const StageCost &cost, int N,
                                       const VectorXd &x0, const GaussianBelief &belief,
                                       const std::vector<BaseSample> &scenarios);

  /// Deterministic N-step cost at theta = belief mean.
  Objective assemble_ce_objective(const ParamAffineModel &model, const StageCost &cost, int N, const VectorXd &x0,
                                  const GaussianBelief &belief);

  /// Dispatch on config.kind.
  ControlDecision controller_step(const ParamAffineModel &model, const StageCost &cost,
                                  const ControllerConfig &config, const VectorXd &x, const GaussianBelief &belief,
                                  std::uint64_t step_seed, const ControlDecision *prev = nullptr);

} // namespace dmpc
