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

#include "dualmpc/nlp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>

namespace dmpc
{

  DecisionLayout DecisionLayout::tree(int nu, int L, int Ns, int N)
  {
    require(nu >= 1, "layout: nu must be positive");
    require(L >= 0 && L < N, "layout: need 0 <= L < N");
    require(Ns >= 1, "layout: Ns must be positive");
    DecisionLayout d;
    d.nu = nu;
    d.L = L;
    d.Ns = Ns;
    d.N = N;
    int count = 1;
    d.dual_nodes = 0;
    for (int k = 0; k < L; ++k)
    {
      d.dual_nodes += count;
      count *= Ns;
    }
    d.leaves = count;
    d.tail_len = N - L;
    return d;
  }

  DecisionLayout DecisionLayout::sequence(int nu, int N) { return tree(nu, 0, 1, N); }

  int DecisionLayout::depth_begin(int k) const
  {
    int begin = 0, count = 1;
    for (int i = 0; i < k; ++i)
    {
      begin += count;
      count *= Ns;
    }
    return begin;
  }

  template <class S>
  UnpackedDecision<S> unpack(const DecisionLayout &layout, const Vec<S> &v)
  {
    require_dims(v.size(), layout.size(), "decision vector");
    UnpackedDecision<S> d;
    d.dual.reserve(layout.dual_nodes);
    for (int n = 0; n < layout.dual_nodes; ++n)
      d.dual.push_back(v.segment(layout.dual_offset(n), layout.nu));
    d.tails.resize(layout.leaves);
    for (int leaf = 0; leaf < layout.leaves; ++leaf)
    {
      d.tails[leaf].reserve(layout.tail_len);
      for (int t = 0; t < layout.tail_len; ++t)
        d.tails[leaf].push_back(v.segment(layout.tail_offset(leaf, t), layout.nu));
    }
    return d;
  }

  template UnpackedDecision<double> unpack<double>(const DecisionLayout &, const Vec<double> &);
  template UnpackedDecision<ad::Var> unpack<ad::Var>(const DecisionLayout &, const Vec<ad::Var> &);

  VectorXd pack(const DecisionLayout &layout, const UnpackedDecision<double> &d)
  {
    require(static_cast<int>(d.dual.size()) == layout.dual_nodes, "pack: dual input count");
    require(static_cast<int>(d.tails.size()) == layout.leaves, "pack: leaf count");
    VectorXd v(layout.size());
    for (int n = 0; n < layout.dual_nodes; ++n)
    {
      require_dims(d.dual[n].size(), layout.nu, "pack: dual input");
      v.segment(layout.dual_offset(n), layout.nu) = d.dual[n];
    }
    for (int leaf = 0; leaf < layout.leaves; ++leaf)
    {
      require(static_cast<int>(d.tails[leaf].size()) == layout.tail_len, "pack: tail length");
      for (int t = 0; t < layout.tail_len; ++t)
      {
        require_dims(d.tails[leaf][t].size(), layout.nu, "pack: tail input");
        v.segment(layout.tail_offset(leaf, t), layout.nu) = d.tails[leaf][t];
      }
    }
    return v;
  }

  Objective::Objective(int dim, ValueFn value, TapedFn taped)
      : dim_(dim), value_(std::move(value)), taped_(std::move(taped))
  {
    require(dim_ >= 0, "objective: negative dimension");
  }

  double Objective::value(const VectorXd &v) const
  {
    require_dims(v.size(), dim_, "objective argument");
    return value_(v);
  }

  double Objective::value_and_gradient(const VectorXd &v, VectorXd &grad) const
  {
    require_dims(v.size(), dim_, "objective argument");
    ad::Recording rec;
    Vec<ad::Var> x(dim_);
    for (int i = 0; i < dim_; ++i)
      x(i) = ad::Var::independent(v(i));
    const ad::Var f = taped_(x);
    if (!std::isfinite(f.value()))
      throw NumericalError("objective is not finite");
    const std::vector<double> adj = rec.tape().sweep(f.id());
    grad.resize(dim_);
    for (int i = 0; i < dim_; ++i)
      grad(i) = adj[x(i).id()];
    if (!grad.allFinite())
      throw NumericalError("objective gradient is not finite");
    return f.value();
  }

  VectorXd gradient(const Objective &objective, const VectorXd &v)
  {
    VectorXd g;
    objective.value_and_gradient(v, g);
    return g;
  }

  VectorXd fd_gradient(const Objective &objective, const VectorXd &v, double rel_step)
  {
    VectorXd g(v.size());
    VectorXd x = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
      const double h = rel_step * std::max(1.0, std::abs(v(i)));
      x(i) = v(i) + h;
      const double fp = objective.value(x);
      x(i) = v(i) - h;
      const double fm = objective.value(x);
      x(i) = v(i);
      g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  template <class S>
  S DualProblem::evaluate(const Vec<S> &v) const
  {
    const DecisionLayout lay = layout();
    const UnpackedDecision<S> d = unpack(lay, v);
    const TreeStateT<S> t = rollout_dual<S>(model, cost, shape, root_state, root_belief, d.dual, samples);
    S tails = S(0);
    const int leaf0 = shape.depth_offsets[shape.L];
    for (int leaf = 0; leaf < lay.leaves; ++leaf)
      tails += tail_cost<S>(model, cost, t.states[leaf0 + leaf], t.beliefs[leaf0 + leaf],
                            std::span<const Vec<S>>(d.tails[leaf]), mode);
    return t.dual_cost + tails / static_cast<double>(lay.leaves);
  }

  template double DualProblem::evaluate<double>(const Vec<double> &) const;
  template ad::Var DualProblem::evaluate<ad::Var>(const Vec<ad::Var> &) const;

  TreeState DualProblem::rollout(const VectorXd &v) const
  {
    const UnpackedDecision<double> d = unpack<double>(layout(), v);
    return rollout_dual<double>(model, cost, shape, root_state, root_belief, d.dual, samples);
  }

  Objective assemble_objective(std::shared_ptr<const DualProblem> problem)
  {
    require(problem != nullptr, "assemble_objective: null problem");
    const int dim = problem->layout().size();
    return Objective::generic(dim, [problem](const auto &v) { return problem->evaluate(v); });
  }

  Objective assemble_objective(const ParamAffineModel &model, const StageCost &cost, const TreeShape &shape, int N,
                               const VectorXd &root_state, const GaussianBelief &root_belief,
                               const std::vector<BaseSample> &samples, TailMode mode)
  {
    require(N > shape.L, "assemble_objective: horizon must exceed the dual horizon");
    return assemble_objective(std::make_shared<const DualProblem>(
        DualProblem{model, cost, shape, N, root_state, root_belief, samples, mode}));
  }

  void SolverOptions::validate() const
  {
    require(max_iters > 0, "solver: max_iters must be positive");
    require(grad_tol > 0.0, "solver: grad_tol must be positive");
    require(step_tol > 0.0, "solver: step_tol must be positive");
    require(armijo_c1 > 0.0 && armijo_c1 < 1.0, "solver: armijo_c1 must be in (0, 1)");
    require(backtrack > 0.0 && backtrack < 1.0, "solver: backtrack must be in (0, 1)");
    require(max_backtracks > 0, "solver: max_backtracks must be positive");
    require(memory > 0, "solver: memory must be positive");
  }

  VectorXd project_box(const VectorXd &v, const VectorXd &lower, const VectorXd &upper)
  {
    require_dims(lower.size(), v.size(), "project_box: lower");
    require_dims(upper.size(), v.size(), "project_box: upper");
    return v.cwiseMax(lower).cwiseMin(upper);
  }

  std::pair<VectorXd, VectorXd> expand_bounds(const InputBounds &bounds, int dim)
  {
    const Eigen::Index nu = bounds.lower.size();
    require(nu > 0 && dim % nu == 0, "expand_bounds: dimension is not a multiple of nu");
    VectorXd lo(dim), hi(dim);
    for (int i = 0; i < dim; i += static_cast<int>(nu))
    {
      lo.segment(i, nu) = bounds.lower;
      hi.segment(i, nu) = bounds.upper;
    }
    return {lo, hi};
  }

  namespace
  {

    struct Pair
    {
      VectorXd s;
      VectorXd y;
    };

    bool try_eval(const Objective &obj, const VectorXd &x, double &f, VectorXd &g)
    {
      try
      {
        f = obj.value_and_gradient(x, g);
        return true;
      }
      catch (const NumericalError &)
      {
      }
      catch (const FactorizationError &)
      {
      }
      return false;
    }

    // Two-loop recursion restricted to the free variables.
    VectorXd lbfgs_direction(const VectorXd &g, const Eigen::Array<bool, Eigen::Dynamic, 1> &free,
                             const std::deque<Pair> &mem)
    {
      auto mask = [&](const VectorXd &v) { return VectorXd(free.select(v, 0.0)); };
      VectorXd q = mask(g);
      const std::size_t m = mem.size();
      std::vector<double> alpha(m), rho(m);
      std::vector<VectorXd> s(m), y(m);
      for (std::size_t i = 0; i < m; ++i)
      {
        s[i] = mask(mem[i].s);
        y[i] = mask(mem[i].y);
        const double sy = s[i].dot(y[i]);
        rho[i] = sy > 0.0 ? 1.0 / sy : 0.0;
      }
      for (std::size_t i = m; i-- > 0;)
      {
        alpha[i] = rho[i] * s[i].dot(q);
        q -= alpha[i] * y[i];
      }
      double gamma = 1.0;
      if (m > 0)
      {
        const double yy = y[m - 1].squaredNorm();
        const double sy = s[m - 1].dot(y[m - 1]);
        if (yy > 0.0 && sy > 0.0)
          gamma = sy / yy;
      }
      VectorXd r = gamma * q;
      for (std::size_t i = 0; i < m; ++i)
      {
        const double beta = rho[i] * y[i].dot(r);
        r += (alpha[i] - beta) * s[i];
      }
      return -mask(r);
    }

  } // namespace

  SolveResult solve_box(const Objective &objective, const VectorXd &v0, const VectorXd &lower,
                        const VectorXd &upper, const SolverOptions &opts)
  {
    opts.validate();
    const auto t0 = std::chrono::steady_clock::now();
    require_dims(v0.size(), objective.dim(), "solve_box: v0");
    require_dims(lower.size(), objective.dim(), "solve_box: lower");
    require_dims(upper.size(), objective.dim(), "solve_box: upper");
    require((lower.array() <= upper.array()).all(), "solve_box: lower exceeds upper");

    SolveResult res;
    SolveStats &st = res.stats;
    VectorXd x = project_box(v0, lower, upper);
    VectorXd g;
    double f = objective.value_and_gradient(x, g);
    st.evaluations = 1;
    st.objective_trace.push_back(f);
    const double tol = opts.relative_grad_tol ? opts.grad_tol * (1.0 + std::abs(f)) : opts.grad_tol;
    st.grad_tol_used = tol;

    std::deque<Pair> mem;
    const Eigen::Index n = x.size();
    for (;;)
    {
      const VectorXd pg = project_box(x - g, lower, upper) - x;
      const double pgn = n > 0 ? pg.cwiseAbs().maxCoeff() : 0.0;
      st.pg_norm_trace.push_back(pgn);
      st.final_pg_norm = pgn;
      if (pgn <= tol)
      {
        st.termination = "converged";
        break;
      }
      if (st.iterations >= opts.max_iters)
      {
        st.termination = "max_iters";
        break;
      }

      Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
      for (Eigen::Index i = 0; i < n; ++i)
        free(i) = !((x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0));

      bool accepted = false;
      VectorXd xn, gn;
      double fn = f;
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
      {
        const bool quasi_newton = attempt == 0 && !mem.empty();
        if (attempt == 1 && mem.empty())
          break;
        VectorXd d;
        double alpha = 1.0;
        if (quasi_newton)
        {
          d = lbfgs_direction(g, free, mem);
          if (!(g.dot(d) < 0.0))
            continue;
        }
        else
        {
          d = free.select(-g, 0.0);
          const double dmax = d.cwiseAbs().maxCoeff();
          alpha = dmax > 1.0 ? 1.0 / dmax : 1.0;
        }
        for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= opts.backtrack)
        {
          VectorXd trial = project_box(x + alpha * d, lower, upper);
          const VectorXd step = trial - x;
          const double slope = g.dot(step);
          if (step.cwiseAbs().maxCoeff() == 0.0)
            break;
          if (!(slope < 0.0))
          {
            if (quasi_newton)
              break;
            continue;
          }
          double ft;
          VectorXd gt;
          ++st.evaluations;
          if (!try_eval(objective, trial, ft, gt))
            continue;
          if (ft <= f + opts.armijo_c1 * slope)
          {
            accepted = true;
            xn = std::move(trial);
            gn = std::move(gt);
            fn = ft;
            break;
          }
        }
        if (!accepted && quasi_newton)
          mem.clear();
      }
      if (!accepted)
      {
        st.termination = "line_search_stalled";
        break;
      }

      Pair p{xn - x, gn - g};
      const double sy = p.s.dot(p.y);
      if (sy > 1e-12 * p.s.norm() * p.y.norm())
      {
        mem.push_back(std::move(p));
        if (static_cast<int>(mem.size()) > opts.memory)
          mem.pop_front();
      }
      const double step_inf = (xn - x).cwiseAbs().maxCoeff();
      x = std::move(xn);
      g = std::move(gn);
      f = fn;
      ++st.iterations;
      st.objective_trace.push_back(f);
      if (step_inf <= opts.step_tol * (1.0 + x.cwiseAbs().maxCoeff()))
      {
        const VectorXd pg2 = project_box(x - g, lower, upper) - x;
        st.final_pg_norm = pg2.cwiseAbs().maxCoeff();
        st.pg_norm_trace.push_back(st.final_pg_norm);
        st.termination = st.final_pg_norm <= tol ? "converged" : "step_tol";
        break;
      }
    }
    res.v = std::move(x);
    st.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  void write_trace_csv(std::ostream &os, const SolveStats &stats)
  {
    os << "iteration,objective,pg_norm\n";
    char buf[96];
    for (std::size_t i = 0; i < stats.objective_trace.size(); ++i)
    {
      const double pg = i < stats.pg_norm_trace.size() ? stats.pg_norm_trace[i] : std::nan("");
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, stats.objective_trace[i], pg);
      os << buf;
    }
  }

} // namespace dmpc
