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

// Moment propagation over the exploitation tail, where the parameter belief
// is frozen at its leaf value.

#pragma once

#include <span>

#include "dualmpc/belief.hpp"
#include "dualmpc/model.hpp"

namespace dmpc
{

  enum class TailMode
  {
    CE,
    Taylor
  };

  /// Joint moments of the augmented state (x, theta).
  template <class S>
  struct AugmentedMomentsT
  {
    Vec<S> mean;
    Mat<S> cov;
  };

  using AugmentedMoments = AugmentedMomentsT<double>;

  /// mean = (x_L, mu_theta), cov = blkdiag(0, Sigma_theta)
  template <class S>
  AugmentedMomentsT<S> init_tail(const Vec<S> &leaf_state, const GaussianBeliefT<S> &leaf_belief);

  /// Mean recursion at the means; covariance carried over unchanged.
  template <class S>
  AugmentedMomentsT<S> step_ce(const ParamAffineModel &model, const AugmentedMomentsT<S> &m, const Vec<S> &u);

  /// First-order Taylor step: cov+ = blkdiag(G Sw G^T, 0) + A cov A^T with
  /// A = [[d/dx(g + Phi mu_theta), Phi], [0, I]].
  template <class S>
  AugmentedMomentsT<S> step_taylor(const ParamAffineModel &model, const AugmentedMomentsT<S> &m, const Vec<S> &u);

  /// E[l(x, u)] for x ~ (mean_x, cov_x).
  template <class S>
  S expected_stage_cost(const StageCost &cost, const Vec<S> &mean_x, const Mat<S> &cov_x, const Vec<S> &u);

  template <class S>
  S expected_terminal_cost(const StageCost &cost, const Vec<S> &mean_x, const Mat<S> &cov_x);

  /// Expected cost of the tail inputs u_L..u_{N-1} from one leaf, including the terminal cost.
  template <class S>
  S tail_cost(const ParamAffineModel &model, const StageCost &cost, const Vec<S> &leaf_state,
              const GaussianBeliefT<S> &leaf_belief, std::span<const Vec<S>> tail_inputs, TailMode mode);

  /// Predicted state means along the tail (N-L+1 entries, starting at the leaf).
  std::vector<VectorXd> tail_means(const ParamAffineModel &model, const VectorXd &leaf_state,
                                   const GaussianBelief &leaf_belief, std::span<const VectorXd> tail_inputs);

} // namespace dmpc
