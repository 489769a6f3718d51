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

#include "dualmpc/propagate.hpp"

namespace dmpc
{

  template <class S>
  AugmentedMomentsT<S> init_tail(const Vec<S> &leaf_state, const GaussianBeliefT<S> &leaf_belief)
  {
    const Eigen::Index nx = leaf_state.size(), nb = leaf_belief.mean.size();
    AugmentedMomentsT<S> m;
    m.mean.resize(nx + nb);
    m.mean << leaf_state, leaf_belief.mean;
    m.cov = Mat<S>::Zero(nx + nb, nx + nb);
    m.cov.bottomRightCorner(nb, nb) = leaf_belief.cov;
    return m;
  }

  template <class S>
  AugmentedMomentsT<S> step_ce(const ParamAffineModel &model, const AugmentedMomentsT<S> &m, const Vec<S> &u)
  {
    const int nx = model.nx(), nb = model.nb();
    require_dims(m.mean.size(), nx + nb, "step_ce: moments");
    AugmentedMomentsT<S> next = m;
    next.mean.head(nx) = eval_step_deterministic<S>(model, m.mean.head(nx), u, m.mean.tail(nb));
    return next;
  }

  template <class S>
  AugmentedMomentsT<S> step_taylor(const ParamAffineModel &model, const AugmentedMomentsT<S> &m, const Vec<S> &u)
  {
    const int nx = model.nx(), nb = model.nb();
    require_dims(m.mean.size(), nx + nb, "step_taylor: moments");
    require(m.cov.rows() == nx + nb && m.cov.cols() == nx + nb, "step_taylor: covariance shape");
    const Vec<S> mx = m.mean.head(nx);
    const Vec<S> mtheta = m.mean.tail(nb);
    const Mat<S> phi = eval_basis(model, mx, u);

    AugmentedMomentsT<S> next;
    next.mean = m.mean;
    next.mean.head(nx) = eval_drift(model, mx, u) + phi * mtheta;

    Mat<S> a = Mat<S>::Identity(nx + nb, nx + nb);
    a.topLeftCorner(nx, nx) = eval_basis_jac(model, mx, u, mtheta);
    a.topRightCorner(nx, nb) = phi;
    Mat<S> cov = a * m.cov * a.transpose();
    const MatrixXd gsg = model.noise_gain() * model.noise_cov() * model.noise_gain().transpose();
    cov.topLeftCorner(nx, nx) += gsg.cast<S>();
    next.cov = symmetrize<S>(cov);
    return next;
  }

  template <class S>
  S expected_stage_cost(const StageCost &cost, const Vec<S> &mean_x, const Mat<S> &cov_x, const Vec<S> &u)
  {
    if (cost.kind == StageCost::Kind::Linear)
      return stage_cost(cost, mean_x, u);
    require(cov_x.rows() == cost.Q.rows() && cov_x.cols() == cost.Q.rows(), "expected_stage_cost: covariance shape");
    return stage_cost(cost, mean_x, u) + (cost.Q.cast<S>() * cov_x).trace();
  }

  template <class S>
  S expected_terminal_cost(const StageCost &cost, const Vec<S> &mean_x, const Mat<S> &cov_x)
  {
    if (cost.kind == StageCost::Kind::Linear)
      return terminal_cost(cost, mean_x);
    require(cov_x.rows() == cost.Q_terminal.rows() && cov_x.cols() == cost.Q_terminal.rows(),
            "expected_terminal_cost: covariance shape");
    return terminal_cost(cost, mean_x) + (cost.Q_terminal.cast<S>() * cov_x).trace();
  }

  template <class S>
  S tail_cost(const ParamAffineModel &model, const StageCost &cost, const Vec<S> &leaf_state,
              const GaussianBeliefT<S> &leaf_belief, std::span<const Vec<S>> tail_inputs, TailMode mode)
  {
    const int nx = model.nx(), nb = model.nb();
    require_dims(leaf_state.size(), nx, "tail_cost: leaf state");
    require_dims(leaf_belief.mean.size(), nb, "tail_cost: leaf belief");

    // A cost that ignores the covariance only needs the mean recursion, which
    // both modes share.
    if (!cost.uses_covariance() || mode == TailMode::CE)
    {
      const Mat<S> cov_x = Mat<S>::Zero(nx, nx);
      Vec<S> x = leaf_state;
      S total = S(0);
      for (const Vec<S> &u : tail_inputs)
      {
        total += expected_stage_cost(cost, x, cov_x, u);
        x = eval_step_deterministic<S>(model, x, u, leaf_belief.mean);
      }
      return total + expected_terminal_cost(cost, x, cov_x);
    }

    AugmentedMomentsT<S> m = init_tail(leaf_state, leaf_belief);
    S total = S(0);
    for (const Vec<S> &u : tail_inputs)
    {
      total += expected_stage_cost<S>(cost, m.mean.head(nx), m.cov.topLeftCorner(nx, nx), u);
      m = step_taylor(model, m, u);
    }
    return total + expected_terminal_cost<S>(cost, m.mean.head(nx), m.cov.topLeftCorner(nx, nx));
  }

  std::vector<VectorXd> tail_means(const ParamAffineModel &model, const VectorXd &leaf_state,
                                   const GaussianBelief &leaf_belief, std::span<const VectorXd> tail_inputs)
  {
    std::vector<VectorXd> out{leaf_state};
    VectorXd x = leaf_state;
    for (const VectorXd &u : tail_inputs)
    {
      x = eval_step_deterministic<double>(model, x, u, leaf_belief.mean);
      out.push_back(x);
    }
    return out;
  }

#define DMPC_INSTANTIATE(S)                                                                                    \
  template AugmentedMomentsT<S> init_tail<S>(const Vec<S> &, const GaussianBeliefT<S> &);                      \
  template AugmentedMomentsT<S> step_ce<S>(const ParamAffineModel &, const AugmentedMomentsT<S> &,             \
                                           const Vec<S> &);                                                    \
  template AugmentedMomentsT<S> step_taylor<S>(const ParamAffineModel &, const AugmentedMomentsT<S> &,         \
                                               const Vec<S> &);                                                \
  template S expected_stage_cost<S>(const StageCost &, const Vec<S> &, const Mat<S> &, const Vec<S> &);        \
  template S expected_terminal_cost<S>(const StageCost &, const Vec<S> &, const Mat<S> &);                     \
  template S tail_cost<S>(const ParamAffineModel &, const StageCost &, const Vec<S> &,                         \
                          const GaussianBeliefT<S> &, std::span<const Vec<S>>, TailMode);

  DMPC_INSTANTIATE(double)
  DMPC_INSTANTIATE(ad::Var)
#undef DMPC_INSTANTIATE

} // namespace dmpc
