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

#include "dualmpc/belief.hpp"

#include <cmath>

namespace dmpc
{

  GaussianBelief make_belief(VectorXd mean, MatrixXd cov)
  {
    require(mean.size() > 0, "belief: empty mean");
    require(cov.rows() == mean.size() && cov.cols() == mean.size(), "belief: covariance must be n x n");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "belief: covariance must be symmetric");
    chol_spd<double>(cov);
    return {std::move(mean), std::move(cov)};
  }

  template <class S>
  GaussianBeliefT<S> posterior_update_info(const GaussianBeliefT<S> &prior, const Mat<S> &phi_eff,
                                           const Vec<S> &residual, const MatrixXd &noise_prec_eff)
  {
    const Eigen::Index nb = prior.mean.size();
    require(prior.cov.rows() == nb && prior.cov.cols() == nb, "posterior_update: prior covariance shape");
    require(phi_eff.cols() == nb, "posterior_update: phi_eff must have nb columns");
    require_dims(residual.size(), phi_eff.rows(), "posterior_update: residual");
    require(noise_prec_eff.rows() == phi_eff.rows() && noise_prec_eff.cols() == phi_eff.rows(),
            "posterior_update: noise matrix must be m x m");

    const Mat<S> prior_prec = spd_inverse<S>(prior.cov);
    const Mat<S> ht_sinv = phi_eff.transpose() * noise_prec_eff.cast<S>();
    const Mat<S> post_prec = symmetrize<S>(prior_prec + ht_sinv * phi_eff);
    GaussianBeliefT<S> post;
    post.cov = spd_inverse<S>(post_prec);
    post.mean = post.cov * (prior_prec * prior.mean + ht_sinv * residual);
    return post;
  }

  template <class S>
  GaussianBeliefT<S> posterior_update(const GaussianBeliefT<S> &prior, const Mat<S> &phi_eff,
                                      const Vec<S> &residual, const MatrixXd &noise_cov_eff)
  {
    require(noise_cov_eff.rows() == noise_cov_eff.cols(), "posterior_update: noise covariance must be square");
    Mat<double> l;
    require(try_cholesky<double>(symmetrize<double>(noise_cov_eff), l),
            "posterior_update: noise covariance is singular or indefinite");
    return posterior_update_info(prior, phi_eff, residual, spd_inverse<double>(noise_cov_eff));
  }

  template <class S>
  GaussianBeliefT<S> update_from_transition(const ParamAffineModel &model, const GaussianBeliefT<S> &prior,
                                            const Vec<S> &x, const Vec<S> &u, const Vec<S> &x_next)
  {
    require_dims(x_next.size(), model.nx(), "next state");
    const Mat<S> phi = eval_basis(model, x, u);
    const Vec<S> g = eval_drift(model, x, u);
    const auto &rows = model.informative_rows();
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    Mat<S> phi_eff(m, model.nb());
    Vec<S> residual(m);
    for (Eigen::Index r = 0; r < m; ++r)
    {
      phi_eff.row(r) = phi.row(rows[r]);
      residual(r) = x_next(rows[r]) - g(rows[r]);
    }
    return posterior_update_info(prior, phi_eff, residual, model.noise_prec_eff());
  }

  template <class S>
  Vec<S> reparam_sample(const GaussianBeliefT<S> &belief, const VectorXd &z)
  {
    require_dims(z.size(), belief.mean.size(), "reparam_sample: base sample");
    return belief.mean + chol_spd<S>(belief.cov) * z.cast<S>();
  }

#define DMPC_INSTANTIATE(S)                                                                             \
  template GaussianBeliefT<S> posterior_update_info<S>(const GaussianBeliefT<S> &, const Mat<S> &,      \
                                                       const Vec<S> &, const MatrixXd &);               \
  template GaussianBeliefT<S> posterior_update<S>(const GaussianBeliefT<S> &, const Mat<S> &,           \
                                                  const Vec<S> &, const MatrixXd &);                    \
  template GaussianBeliefT<S> update_from_transition<S>(const ParamAffineModel &,                       \
                                                        const GaussianBeliefT<S> &, const Vec<S> &,     \
                                                        const Vec<S> &, const Vec<S> &);                \
  template Vec<S> reparam_sample<S>(const GaussianBeliefT<S> &, const VectorXd &);

  DMPC_INSTANTIATE(double)
  DMPC_INSTANTIATE(ad::Var)
#undef DMPC_INSTANTIATE

} // namespace dmpc
