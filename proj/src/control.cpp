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

#include "dualmpc/control.hpp"

#include <memory>

#include "dualmpc/rng.hpp"

namespace dmpc
{

  std::string to_string(ControllerKind k)
  {
    switch (k)
    {
    case ControllerKind::DMPC:
      return "dmpc";
    case ControllerKind::CEMPC:
      return "cempc";
    case ControllerKind::ASMPC:
      return "asmpc";
    }
    return "unknown";
  }

  ControllerKind controller_kind_from_string(const std::string &s)
  {
    if (s == "dmpc")
      return ControllerKind::DMPC;
    if (s == "cempc")
      return ControllerKind::CEMPC;
    if (s == "asmpc")
      return ControllerKind::ASMPC;
    throw ContractError("unknown controller kind '" + s + "' (expected dmpc, cempc or asmpc)");
  }

  void ControllerConfig::validate(int nu) const
  {
    require(N >= 1, "controller: N must be positive");
    require(Ns >= 1, "controller: Ns must be positive");
    if (kind == ControllerKind::DMPC)
      require(L >= 1 && L < N, "controller: D-MPC needs 1 <= L < N");
    if (kind == ControllerKind::ASMPC)
      require(L >= 0, "controller: aS-MPC needs L >= 0");
    bounds.validate(nu);
    solver.validate();
  }

  DecisionLayout ControllerConfig::layout(int nu) const
  {
    if (kind == ControllerKind::DMPC)
      return DecisionLayout::tree(nu, L, Ns, N);
    return DecisionLayout::sequence(nu, N);
  }

  int ControllerConfig::scenario_count() const
  {
    int m = 1;
    for (int k = 0; k < L; ++k)
      m *= Ns;
    return m;
  }

  std::vector<BaseSample> draw_base_samples(int count, int nb, int nw_total, std::uint64_t seed)
  {
    std::mt19937_64 gen(seed);
    std::vector<BaseSample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
    {
      BaseSample s;
      s.z_theta = standard_normal(gen, nb);
      s.z_w = standard_normal(gen, nw_total);
      out.push_back(std::move(s));
    }
    return out;
  }

  VectorXd warm_start(const ControlDecision *prev, const DecisionLayout &layout, const InputBounds &bounds)
  {
    const auto [lo, hi] = expand_bounds(bounds, layout.size());
    if (prev == nullptr || !(prev->layout == layout) || prev->decision.size() != layout.size())
      return project_box(VectorXd::Zero(layout.size()), lo, hi);

    const int nu = layout.nu;
    const UnpackedDecision<double> old = unpack<double>(layout, prev->decision);
    auto tail_mean = [&](int t) {
      VectorXd m = VectorXd::Zero(nu);
      for (const auto &tail : old.tails)
        m += tail[std::min(t, layout.tail_len - 1)];
      return VectorXd(m / static_cast<double>(layout.leaves));
    };
    auto depth_mean = [&](int k) {
      if (k >= layout.L)
        return tail_mean(k - layout.L);
      VectorXd m = VectorXd::Zero(nu);
      const int b = layout.depth_begin(k), e = layout.depth_begin(k + 1);
      for (int n = b; n < e; ++n)
        m += old.dual[n];
      return VectorXd(m / static_cast<double>(e - b));
    };

    UnpackedDecision<double> d;
    for (int k = 0; k < layout.L; ++k)
    {
      const VectorXd u = depth_mean(k + 1);
      for (int n = layout.depth_begin(k); n < layout.depth_begin(k + 1); ++n)
        d.dual.push_back(u);
    }
    std::vector<VectorXd> tail;
    for (int t = 0; t < layout.tail_len; ++t)
      tail.push_back(tail_mean(t + 1));
    d.tails.assign(layout.leaves, tail);
    return project_box(pack(layout, d), lo, hi);
  }

  namespace
  {

    ControlDecision finish(const Objective &obj, const DecisionLayout &layout, const ControllerConfig &config,
                           const ControlDecision *prev)
    {
      const auto [lo, hi] = expand_bounds(config.bounds, layout.size());
      const VectorXd v0 = warm_start(config.warm_start ? prev : nullptr, layout, config.bounds);
      SolveResult res = solve_box(obj, v0, lo, hi, config.solver);
      ControlDecision d;
      d.layout = layout;
      d.u0 = res.v.head(layout.nu);
      d.decision = std::move(res.v);
      d.stats = std::move(res.stats);
      return d;
    }

    std::vector<VectorXd> sequence_rollout(const ParamAffineModel &model, const VectorXd &x0, const VectorXd &theta,
                                           const std::vector<VectorXd> &inputs, const VectorXd *z_w)
    {
      std::vector<VectorXd> xs{x0};
      VectorXd x = x0;
      for (std::size_t k = 0; k < inputs.size(); ++k)
      {
        VectorXd w = VectorXd::Zero(model.nw());
        if (z_w)
          w = model.noise_chol() * z_w->segment(static_cast<Eigen::Index>(k) * model.nw(), model.nw());
        x = eval_step_truth<double>(model, x, inputs[k], theta, w);
        xs.push_back(x);
      }
      return xs;
    }

  } // namespace

  ControlDecision dmpc_step_with_samples(const ParamAffineModel &model, const StageCost &cost,
                                         const ControllerConfig &config, const VectorXd &x,
                                         const GaussianBelief &belief, const std::vector<BaseSample> &samples,
                                         const ControlDecision *prev)
  {
    require(config.kind == ControllerKind::DMPC, "dmpc_step: controller kind must be dmpc");
    config.validate(model.nu());
    const TreeShape shape = build_tree_shape(config.L, config.Ns);
    auto problem = std::make_shared<const DualProblem>(
        DualProblem{model, cost, shape, config.N, x, belief, samples, config.tail_mode});
    const DecisionLayout layout = problem->layout();
    ControlDecision d = finish(assemble_objective(problem), layout, config, prev);

    d.shape = shape;
    d.tree = problem->rollout(d.decision);
    const UnpackedDecision<double> u = unpack<double>(layout, d.decision);
    const int leaf0 = shape.depth_offsets[shape.L];
    for (int leaf = 0; leaf < shape.leaves(); ++leaf)
    {
      const int node = leaf0 + leaf;
      std::vector<VectorXd> path;
      for (int n = node; n >= 0; n = shape.parent[n])
        path.insert(path.begin(), d.tree.states[n]);
      const GaussianBelief &b = d.tree.beliefs[node];
      const auto tail = tail_means(model, d.tree.states[node], b, u.tails[leaf]);
      path.insert(path.end(), tail.begin() + 1, tail.end());
      d.predicted.push_back(std::move(path));
      d.prediction_group.push_back(shape.initial_branch(node));
      d.leaf_beliefs.push_back(b);
    }
    return d;
  }

  ControlDecision dmpc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                            const VectorXd &x, const GaussianBelief &belief, std::uint64_t step_seed,
                            const ControlDecision *prev)
  {
    const TreeShape shape = build_tree_shape(config.L, config.Ns);
    const auto samples = draw_base_samples(shape.edges(), model.nb(), model.nw(), step_seed);
    return dmpc_step_with_samples(model, cost, config, x, belief, samples, prev);
  }

  Objective assemble_ce_objective(const ParamAffineModel &model, const StageCost &cost, int N, const VectorXd &x0,
                                  const GaussianBelief &belief)
  {
    require(N >= 1, "ce objective: N must be positive");
    require_dims(x0.size(), model.nx(), "ce objective: state");
    const DecisionLayout layout = DecisionLayout::sequence(model.nu(), N);
    auto ctx = std::make_shared<const std::tuple<ParamAffineModel, StageCost, VectorXd, VectorXd>>(
        model, cost, x0, belief.mean);
    return Objective::generic(layout.size(), [ctx, layout](const auto &v) {
      using S = typename std::decay_t<decltype(v)>::Scalar;
      const auto &[m, c, x0v, mu] = *ctx;
      const UnpackedDecision<S> d = unpack<S>(layout, v);
      const Vec<S> theta = mu.template cast<S>();
      Vec<S> x = x0v.template cast<S>();
      S total = S(0);
      for (const Vec<S> &u : d.tails[0])
      {
        total += stage_cost<S>(c, x, u);
        x = eval_step_deterministic<S>(m, x, u, theta);
      }
      return S(total + terminal_cost<S>(c, x));
    });
  }

  ControlDecision cempc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                             const VectorXd &x, const GaussianBelief &belief, const ControlDecision *prev)
  {
    require(config.kind == ControllerKind::CEMPC, "cempc_step: controller kind must be cempc");
    config.validate(model.nu());
    const DecisionLayout layout = config.layout(model.nu());
    ControlDecision d = finish(assemble_ce_objective(model, cost, config.N, x, belief), layout, config, prev);
    const UnpackedDecision<double> u = unpack<double>(layout, d.decision);
    d.predicted.push_back(sequence_rollout(model, x, belief.mean, u.tails[0], nullptr));
    d.prediction_group.push_back(0);
    return d;
  }

  Objective assemble_sampled_objective(const ParamAffineModel &model, const StageCost &cost, int N,
                                       const VectorXd &x0, const GaussianBelief &belief,
                                       const std::vector<BaseSample> &scenarios)
  {
    require(N >= 1, "sampled objective: N must be positive");
    require(!scenarios.empty(), "sampled objective: need at least one scenario");
    require_dims(x0.size(), model.nx(), "sampled objective: state");
    struct Scenario
    {
      VectorXd theta;
      std::vector<VectorXd> gw; // G w_k
    };
    std::vector<Scenario> sc;
    for (const BaseSample &s : scenarios)
    {
      require_dims(s.z_w.size(), static_cast<Eigen::Index>(N) * model.nw(), "sampled objective: z_w");
      Scenario e{reparam_sample<double>(belief, s.z_theta), {}};
      for (int k = 0; k < N; ++k)
        e.gw.push_back(model.noise_gain() * (model.noise_chol() * s.z_w.segment(k * model.nw(), model.nw())));
      sc.push_back(std::move(e));
    }
    const DecisionLayout layout = DecisionLayout::sequence(model.nu(), N);
    auto ctx = std::make_shared<const std::tuple<ParamAffineModel, StageCost, VectorXd, std::vector<Scenario>>>(
        model, cost, x0, std::move(sc));
    return Objective::generic(layout.size(), [ctx, layout](const auto &v) {
      using S = typename std::decay_t<decltype(v)>::Scalar;
      const auto &[m, c, x0v, scen] = *ctx;
      const UnpackedDecision<S> d = unpack<S>(layout, v);
      S total = S(0);
      for (const Scenario &e : scen)
      {
        const Vec<S> theta = e.theta.template cast<S>();
        Vec<S> x = x0v.template cast<S>();
        for (std::size_t k = 0; k < d.tails[0].size(); ++k)
        {
          const Vec<S> &u = d.tails[0][k];
          total += stage_cost<S>(c, x, u);
          x = eval_step_deterministic<S>(m, x, u, theta) + e.gw[k].template cast<S>();
        }
        total += terminal_cost<S>(c, x);
      }
      return S(total / static_cast<double>(scen.size()));
    });
  }

  ControlDecision asmpc_step_with_samples(const ParamAffineModel &model, const StageCost &cost,
                                          const ControllerConfig &config, const VectorXd &x,
                                          const GaussianBelief &belief, const std::vector<BaseSample> &scenarios,
                                          const ControlDecision *prev)
  {
    require(config.kind == ControllerKind::ASMPC, "asmpc_step: controller kind must be asmpc");
    config.validate(model.nu());
    const DecisionLayout layout = config.layout(model.nu());
    ControlDecision d =
        finish(assemble_sampled_objective(model, cost, config.N, x, belief, scenarios), layout, config, prev);
    const UnpackedDecision<double> u = unpack<double>(layout, d.decision);
    for (const BaseSample &s : scenarios)
    {
      const VectorXd theta = reparam_sample<double>(belief, s.z_theta);
      d.predicted.push_back(sequence_rollout(model, x, theta, u.tails[0], &s.z_w));
      d.prediction_group.push_back(0);
    }
    return d;
  }

  ControlDecision asmpc_step(const ParamAffineModel &model, const StageCost &cost, const ControllerConfig &config,
                             const VectorXd &x, const GaussianBelief &belief, std::uint64_t step_seed,
                             const ControlDecision *prev)
  {
    const auto scenarios =
        draw_base_samples(config.scenario_count(), model.nb(), config.N * model.nw(), step_seed);
    return asmpc_step_with_samples(model, cost, config, x, belief, scenarios, prev);
  }

  ControlDecision controller_step(const ParamAffineModel &model, const StageCost &cost,
                                  const ControllerConfig &config, const VectorXd &x, const GaussianBelief &belief,
                                  std::uint64_t step_seed, const ControlDecision *prev)
  {
    switch (config.kind)
    {
    case ControllerKind::DMPC:
      return dmpc_step(model, cost, config, x, belief, step_seed, prev);
    case ControllerKind::CEMPC:
      return cempc_step(model, cost, config, x, belief, prev);
    case ControllerKind::ASMPC:
      return asmpc_step(model, cost, config, x, belief, step_seed, prev);
    }
    throw ContractError("controller_step: unknown controller kind");
  }

} // namespace dmpc
