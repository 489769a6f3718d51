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

// Gaussian parameter belief and its conjugate update.

#pragma once

#include "dualmpc/linalg.hpp"
#include "dualmpc/model.hpp"

namespace dmpc
{

  template <class S>
  struct GaussianBeliefT
  {
    Vec<S> mean;
    Mat<S> cov;

    int dim() const noexcept { return static_cast<int>(mean.size()); }
  };

  using GaussianBelief = GaussianBeliefT<double>;

  /// Validated construction: square symmetric covariance matching the mean.
  GaussianBelief make_belief(VectorXd mean, MatrixXd cov);

  template <class S>
  GaussianBeliefT<S> lift(const GaussianBelief &b)
  {
    return {b.mean.template cast<S>(), b.cov.template cast<S>()};
  }

  inline GaussianBelief belief_values(const GaussianBeliefT<double> &b) { return b; }
  inline GaussianBelief belief_values(const GaussianBeliefT<ad::Var> &b) { return {values(b.mean), values(b.cov)}; }

  /// Standard-normal draws for one tree edge (or one sampled scenario).
  struct BaseSample
  {
    VectorXd z_theta;
    VectorXd z_w;
  };

  /// Precision-form conjugate update:
  ///   P+ = P + H^T S^-1 H,   mu+ = P+^-1 (P mu + H^T S^-1 r).
  /// `phi_eff` and `residual` are restricted to rows that carry noise.
  template <class S>
  GaussianBeliefT<S> posterior_update(const GaussianBeliefT<S> &prior, const Mat<S> &phi_eff,
                                      const Vec<S> &residual, const MatrixXd &noise_cov_eff);

  /// Same update with the noise precision S^-1 supplied directly.
  template <class S>
  GaussianBeliefT<S> posterior_update_info(const GaussianBeliefT<S> &prior, const Mat<S> &phi_eff,
                                           const Vec<S> &residual, const MatrixXd &noise_prec_eff);

  /// Condition the belief on an observed transition x -> x_next under input u,
  /// using only the noisy rows of the model.
  template <class S>
  GaussianBeliefT<S> update_from_transition(const ParamAffineModel &model, const GaussianBeliefT<S> &prior,
                                            const Vec<S> &x, const Vec<S> &u, const Vec<S> &x_next);

  /// mean + chol(cov) z
  template <class S>
  Vec<S> reparam_sample(const GaussianBeliefT<S> &belief, const VectorXd &z);

} // namespace dmpc
