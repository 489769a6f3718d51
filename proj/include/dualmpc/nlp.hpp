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

// Merged scenario-tree objective and the box-constrained solver.

#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dualmpc/belief.hpp"
#include "dualmpc/model.hpp"
#include "dualmpc/propagate.hpp"
#include "dualmpc/tree.hpp"

namespace dmpc
{

  /// Flat decision vector: interior-node inputs depth-major, then one tail
  /// sequence per leaf, leaf-major. L = 0 describes a single input sequence.
  struct DecisionLayout
  {
    int nu = 1;
    int L = 0;
    int Ns = 1;
    int N = 1;
    int dual_nodes = 0;
    int leaves = 1;
    int tail_len = 1;

    static DecisionLayout tree(int nu, int L, int Ns, int N);
    static DecisionLayout sequence(int nu, int N);

    int size() const noexcept { return nu * (dual_nodes + leaves * tail_len); }
    int dual_offset(int node) const noexcept { return nu * node; }
    int tail_offset(int leaf, int t) const noexcept { return nu * (dual_nodes + leaf * tail_len + t); }
    /// Interior nodes at depth k occupy [depth_begin(k), depth_begin(k+1)).
    int depth_begin(int k) const;

    bool operator==(const DecisionLayout &) const = default;
  };

  template <class S>
  struct UnpackedDecision
  {
    std::vector<Vec<S>> dual;               ///< per interior node
    std::vector<std::vector<Vec<S>>> tails; ///< per leaf, tail_len inputs
  };

  template <class S>
  UnpackedDecision<S> unpack(const DecisionLayout &layout, const Vec<S> &v);

  VectorXd pack(const DecisionLayout &layout, const UnpackedDecision<double> &d);

  /// Scalar objective with a plain evaluation path and a taped path that
  /// yields the gradient by one reverse sweep.
  class Objective
  {
  public:
    using ValueFn = std::function<double(const VectorXd &)>;
    using TapedFn = std::function<ad::Var(const Vec<ad::Var> &)>;

    Objective(int dim, ValueFn value, TapedFn taped);

    /// Build both paths from one callable generic over the scalar type.
    template <class F>
    static Objective generic(int dim, F f)
    {
      auto shared = std::make_shared<F>(std::move(f));
      return Objective(
          dim, [shared](const VectorXd &v) { return (*shared)(Vec<double>(v)); },
          [shared](const Vec<ad::Var> &v) { return (*shared)(v); });
    }

    int dim() const noexcept { return dim_; }
    double value(const VectorXd &v) const;
    /// Value and gradient; NumericalError when either is non-finite.
    double value_and_gradient(const VectorXd &v, VectorXd &grad) const;

  private:
    int dim_;
    ValueFn value_;
    TapedFn taped_;
  };

  VectorXd gradient(const Objective &objective, const VectorXd &v);

  /// Central differences with step rel_step * max(1, |v_i|). Verification only.
  VectorXd fd_gradient(const Objective &objective, const VectorXd &v, double rel_step = 1e-5);

  /// Everything that defines one merged dual problem.
  struct DualProblem
  {
    ParamAffineModel model;
    StageCost cost;
    TreeShape shape;
    int N = 0;
    VectorXd root_state;
    GaussianBelief root_belief;
    std::vector<BaseSample> samples;
    TailMode mode = TailMode::Taylor;

    DecisionLayout layout() const { return DecisionLayout::tree(model.nu(), shape.L, shape.Ns, N); }

    /// Dual-part stage costs plus the leaf-averaged tail costs.
    template <class S>
    S evaluate(const Vec<S> &v) const;

    /// Node states and beliefs for a decision vector.
    TreeState rollout(const VectorXd &v) const;
  };

  Objective assemble_objective(const ParamAffineModel &model, const StageCost &cost, const TreeShape &shape, int N,
                               const VectorXd &root_state, const GaussianBelief &root_belief,
                               const std::vector<BaseSample> &samples, TailMode mode);

  Objective assemble_objective(std::shared_ptr<const DualProblem> problem);

  struct SolverOptions
  {
    int max_iters = 200;
    /// Projected-gradient infinity-norm tolerance, scaled by 1 + |f(v0)| when relative.
    double grad_tol = 1e-6;
    bool relative_grad_tol = true;
    double step_tol = 1e-12;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    int memory = 10;

    void validate() const;
  };

  struct SolveStats
  {
    int iterations = 0;
    int evaluations = 0;
    std::vector<double> objective_trace;
    std::vector<double> pg_norm_trace;
    double final_pg_norm = 0.0;
    double grad_tol_used = 0.0;
    std::string termination;
    double wall_ms = 0.0;
  };

  struct SolveResult
  {
    VectorXd v;
    SolveStats stats;
  };

  VectorXd project_box(const VectorXd &v, const VectorXd &lower, const VectorXd &upper);

  /// Per-variable bounds for a layout, repeating the input box.
  std::pair<VectorXd, VectorXd> expand_bounds(const InputBounds &bounds, int dim);

  /// Projected limited-memory quasi-Newton with Armijo backtracking along the
  /// projection arc. Every iterate is feasible and the objective trace is
  /// non-increasing.
  SolveResult solve_box(const Objective &objective, const VectorXd &v0, const VectorXd &lower,
                        const VectorXd &upper, const SolverOptions &opts = {});

  /// iteration,objective,pg_norm
  void write_trace_csv(std::ostream &os, const SolveStats &stats);

} // namespace dmpc
