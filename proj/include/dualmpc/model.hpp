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

// Parameter-affine dynamics x+ = g(x, u) + Phi(x, u) theta + G w.

#pragma once

#include <concepts>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dualmpc/linalg.hpp"

namespace dmpc
{

  struct ModelDims
  {
    int nx = 0; ///< state
    int nu = 0; ///< input
    int nb = 0; ///< parameters
    int nw = 0; ///< process noise
  };

  /// Type-erased model callables for one scalar type. The Jacobian entries
  /// are optional; an empty function selects the finite-difference fallback.
  template <class S>
  struct ModelFunctions
  {
    std::function<Vec<S>(const Vec<S> &, const Vec<S> &)> drift;
    std::function<Mat<S>(const Vec<S> &, const Vec<S> &)> basis;
    /// d/dx [Phi(x, u) v]
    std::function<Mat<S>(const Vec<S> &, const Vec<S> &, const Vec<S> &)> basis_jac_x;
    std::function<Mat<S>(const Vec<S> &, const Vec<S> &)> drift_jac_x;
  };

  /// A model definition supplies `drift` and `basis` as member templates over
  /// the scalar type, so the same code serves plain evaluation and taping.
  template <class T>
  concept ModelDefinition = requires(const T &m, const Vec<double> &x, const Vec<double> &u) {
    { m.template drift<double>(x, u) } -> std::convertible_to<Vec<double>>;
    { m.template basis<double>(x, u) } -> std::convertible_to<Mat<double>>;
  };

  template <class T>
  concept HasBasisJacobian = requires(const T &m, const Vec<double> &x, const Vec<double> &u) {
    { m.template basis_jac_x<double>(x, u, x) } -> std::convertible_to<Mat<double>>;
  };

  template <class T>
  concept HasDriftJacobian = requires(const T &m, const Vec<double> &x, const Vec<double> &u) {
    { m.template drift_jac_x<double>(x, u) } -> std::convertible_to<Mat<double>>;
  };

  class ParamAffineModel
  {
  public:
    template <ModelDefinition Def>
    ParamAffineModel(std::string name, ModelDims dims, const Def &def, MatrixXd noise_gain,
                     MatrixXd noise_cov)
        : name_(std::move(name)), dims_(dims), noise_gain_(std::move(noise_gain)),
          noise_cov_(std::move(noise_cov))
    {
      bind<double>(def, f64_);
      bind<ad::Var>(def, fad_);
      validate();
    }

    const std::string &name() const noexcept { return name_; }
    const ModelDims &dims() const noexcept { return dims_; }
    int nx() const noexcept { return dims_.nx; }
    int nu() const noexcept { return dims_.nu; }
    int nb() const noexcept { return dims_.nb; }
    int nw() const noexcept { return dims_.nw; }

    const MatrixXd &noise_gain() const noexcept { return noise_gain_; }
    const MatrixXd &noise_cov() const noexcept { return noise_cov_; }
    const MatrixXd &noise_chol() const noexcept { return noise_chol_; }

    /// State rows that carry process noise; the Bayesian update uses only these.
    const std::vector<int> &informative_rows() const noexcept { return informative_rows_; }
    /// (G Sigma_w G^T) restricted to the informative rows, and its inverse.
    const MatrixXd &noise_cov_eff() const noexcept { return noise_cov_eff_; }
    const MatrixXd &noise_prec_eff() const noexcept { return noise_prec_eff_; }

    template <class S>
    const ModelFunctions<S> &functions() const noexcept
    {
      if constexpr (std::is_same_v<S, double>)
        return f64_;
      else
        return fad_;
    }

    bool has_basis_jacobian() const noexcept { return static_cast<bool>(f64_.basis_jac_x); }
    bool has_drift_jacobian() const noexcept { return static_cast<bool>(f64_.drift_jac_x); }

    /// Copy with the analytic Jacobians dropped (forces finite differences).
    ParamAffineModel without_analytic_jacobians() const;

  private:
    template <class S, class Def>
    static void bind(const Def &def, ModelFunctions<S> &f)
    {
      f.drift = [def](const Vec<S> &x, const Vec<S> &u) -> Vec<S> { return def.template drift<S>(x, u); };
      f.basis = [def](const Vec<S> &x, const Vec<S> &u) -> Mat<S> { return def.template basis<S>(x, u); };
      if constexpr (HasBasisJacobian<Def>)
        f.basis_jac_x = [def](const Vec<S> &x, const Vec<S> &u, const Vec<S> &v) -> Mat<S> {
          return def.template basis_jac_x<S>(x, u, v);
        };
      if constexpr (HasDriftJacobian<Def>)
        f.drift_jac_x = [def](const Vec<S> &x, const Vec<S> &u) -> Mat<S> {
          return def.template drift_jac_x<S>(x, u);
        };
    }

    void validate();

    std::string name_;
    ModelDims dims_;
    MatrixXd noise_gain_;
    MatrixXd noise_cov_;
    MatrixXd noise_chol_;
    std::vector<int> informative_rows_;
    MatrixXd noise_cov_eff_;
    MatrixXd noise_prec_eff_;
    ModelFunctions<double> f64_;
    ModelFunctions<ad::Var> fad_;
  };

  /// g(x, u) + Phi(x, u) theta
  template <class S>
  Vec<S> eval_step_deterministic(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                                 const Vec<S> &theta);

  /// g(x, u) + Phi(x, u) theta + G w
  template <class S>
  Vec<S> eval_step_truth(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                         const Vec<S> &theta, const VectorXd &w);

  /// d/dx [g(x, u) + Phi(x, u) v]. Parts without an analytic Jacobian use
  /// central differences with step max(1e-6, 1e-6 |x_i|).
  template <class S>
  Mat<S> eval_basis_jac(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                        const Vec<S> &v);

  template <class S>
  Mat<S> eval_basis(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u);

  template <class S>
  Vec<S> eval_drift(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u);

  struct StageCost
  {
    enum class Kind
    {
      Quadratic,
      Linear
    };

    Kind kind = Kind::Quadratic;
    MatrixXd Q;
    MatrixXd R;
    VectorXd c;
    MatrixXd Q_terminal;
    VectorXd c_terminal;

    static StageCost quadratic(MatrixXd Q, MatrixXd R);
    static StageCost linear(VectorXd c);

    /// True when the expectation depends on the state covariance.
    bool uses_covariance() const noexcept { return kind == Kind::Quadratic; }
    int nx() const noexcept { return kind == Kind::Quadratic ? static_cast<int>(Q.rows()) : static_cast<int>(c.size()); }
    StageCost scaled(double alpha) const;
  };

  /// l(x, u) at a realized state.
  template <class S>
  S stage_cost(const StageCost &cost, const Vec<S> &x, const Vec<S> &u);

  /// l_N(x) at a realized state.
  template <class S>
  S terminal_cost(const StageCost &cost, const Vec<S> &x);

  struct InputBounds
  {
    VectorXd lower;
    VectorXd upper;

    static InputBounds uniform(int nu, double lo, double hi);
    static InputBounds unbounded(int nu);
    void validate(int nu) const;
    bool contains(const VectorXd &u) const;
  };

  /// Parameters of the built-in models, keyed by name ("Ts", "noise_var").
  using ModelParams = std::map<std::string, double>;

  /// x+ = x + theta u + w
  ParamAffineModel make_scalar_gain_model(double noise_var = 0.1);

  /// p+ = p + Ts v,  v+ = v - Ts cos(3p) theta_1 + Ts u theta_2 + w
  ParamAffineModel make_mountain_car_model(double Ts = 7.0, double noise_var = 1e-6);

  /// Registry lookup: "scalar_gain" or "mountain_car". Unknown names or
  /// parameters raise ContractError.
  ParamAffineModel make_builtin_model(const std::string &name, const ModelParams &params);

  std::vector<std::string> builtin_model_names();

} // namespace dmpc
