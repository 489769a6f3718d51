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

#include "dualmpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace dmpc
{

  namespace
  {

    struct ScalarGain
    {
      template <class S>
      Vec<S> drift(const Vec<S> &x, const Vec<S> &) const { return x; }

      template <class S>
      Mat<S> basis(const Vec<S> &, const Vec<S> &u) const
      {
        Mat<S> phi(1, 1);
        phi(0, 0) = u(0);
        return phi;
      }

      template <class S>
      Mat<S> basis_jac_x(const Vec<S> &, const Vec<S> &, const Vec<S> &) const
      {
        return Mat<S>::Zero(1, 1);
      }

      template <class S>
      Mat<S> drift_jac_x(const Vec<S> &, const Vec<S> &) const
      {
        return Mat<S>::Identity(1, 1);
      }
    };

    struct MountainCar
    {
      double Ts = 7.0;

      template <class S>
      Vec<S> drift(const Vec<S> &x, const Vec<S> &) const
      {
        Vec<S> out(2);
        out(0) = x(0) + Ts * x(1);
        out(1) = x(1);
        return out;
      }

      template <class S>
      Mat<S> basis(const Vec<S> &x, const Vec<S> &u) const
      {
        using std::cos;
        Mat<S> phi = Mat<S>::Zero(2, 2);
        phi(1, 0) = -Ts * cos(3.0 * x(0));
        phi(1, 1) = Ts * u(0);
        return phi;
      }

      template <class S>
      Mat<S> basis_jac_x(const Vec<S> &x, const Vec<S> &, const Vec<S> &v) const
      {
        using std::sin;
        Mat<S> j = Mat<S>::Zero(2, 2);
        j(1, 0) = 3.0 * Ts * sin(3.0 * x(0)) * v(0);
        return j;
      }

      template <class S>
      Mat<S> drift_jac_x(const Vec<S> &, const Vec<S> &) const
      {
        Mat<S> j = Mat<S>::Identity(2, 2);
        j(0, 1) = S(Ts);
        return j;
      }
    };

    bool is_symmetric_psd(const MatrixXd &m, double tol = 1e-12)
    {
      if (m.rows() != m.cols())
        return false;
      if (m.rows() == 0)
        return true;
      const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale)
        return false;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff() >= -tol * scale;
    }

    double param_or(const ModelParams &params, const std::string &key, double fallback)
    {
      auto it = params.find(key);
      return it == params.end() ? fallback : it->second;
    }

  } // namespace

  void ParamAffineModel::validate()
  {
    const auto [nx, nu, nb, nw] = dims_;
    require(nx > 0 && nu > 0 && nb > 0 && nw > 0, "model '" + name_ + "': all dimensions must be positive");
    require(noise_gain_.rows() == nx && noise_gain_.cols() == nw, "model '" + name_ + "': noise_gain must be nx x nw");
    require(noise_cov_.rows() == nw && noise_cov_.cols() == nw, "model '" + name_ + "': noise_cov must be nw x nw");
    require((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, noise_cov_.cwiseAbs().maxCoeff()),
            "model '" + name_ + "': noise_cov must be symmetric");
    Mat<double> l;
    require(try_cholesky<double>(noise_cov_, l), "model '" + name_ + "': noise_cov must be positive definite");
    noise_chol_ = l;

    informative_rows_.clear();
    for (int i = 0; i < nx; ++i)
      if (noise_gain_.row(i).cwiseAbs().maxCoeff() > 0.0)
        informative_rows_.push_back(i);
    require(!informative_rows_.empty(), "model '" + name_ + "': no state row carries process noise");

    const MatrixXd full = noise_gain_ * noise_cov_ * noise_gain_.transpose();
    const int m = static_cast<int>(informative_rows_.size());
    noise_cov_eff_.resize(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        noise_cov_eff_(a, b) = full(informative_rows_[a], informative_rows_[b]);
    noise_cov_eff_ = symmetrize<double>(noise_cov_eff_);
    Mat<double> leff;
    require(try_cholesky<double>(noise_cov_eff_, leff),
            "model '" + name_ + "': noise covariance on the noisy rows is singular");
    noise_prec_eff_ = spd_inverse<double>(noise_cov_eff_);

    // Probe the basis at a few fixed points: a noise-free row with a nonzero
    // basis entry would pin theta exactly and is rejected.
    std::mt19937_64 gen(0x5eedULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int probe = 0; probe < 4; ++probe)
    {
      VectorXd x = VectorXd::Zero(nx), u = VectorXd::Zero(nu);
      if (probe > 0)
      {
        for (int i = 0; i < nx; ++i)
          x(i) = unif(gen);
        for (int i = 0; i < nu; ++i)
          u(i) = unif(gen);
      }
      const MatrixXd phi = f64_.basis(x, u);
      require(phi.rows() == nx && phi.cols() == nb, "model '" + name_ + "': basis must return nx x nb");
      const VectorXd g = f64_.drift(x, u);
      require(g.size() == nx, "model '" + name_ + "': drift must return nx entries");
      for (int i = 0; i < nx; ++i)
      {
        if (std::find(informative_rows_.begin(), informative_rows_.end(), i) != informative_rows_.end())
          continue;
        if (phi.row(i).cwiseAbs().maxCoeff() > 0.0)
        {
          std::ostringstream os;
          os << "model '" << name_ << "': state row " << i
             << " has no process noise but depends on theta; the parameter posterior would be degenerate";
          throw ContractError(os.str());
        }
      }
    }
  }

  ParamAffineModel ParamAffineModel::without_analytic_jacobians() const
  {
    ParamAffineModel copy = *this;
    copy.f64_.basis_jac_x = nullptr;
    copy.f64_.drift_jac_x = nullptr;
    copy.fad_.basis_jac_x = nullptr;
    copy.fad_.drift_jac_x = nullptr;
    return copy;
  }

  template <class S>
  Vec<S> eval_drift(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u)
  {
    require_dims(x.size(), model.nx(), "state");
    require_dims(u.size(), model.nu(), "input");
    Vec<S> g = model.functions<S>().drift(x, u);
    require_dims(g.size(), model.nx(), "drift output");
    return g;
  }

  template <class S>
  Mat<S> eval_basis(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u)
  {
    require_dims(x.size(), model.nx(), "state");
    require_dims(u.size(), model.nu(), "input");
    Mat<S> phi = model.functions<S>().basis(x, u);
    require(phi.rows() == model.nx() && phi.cols() == model.nb(), "basis output must be nx x nb");
    return phi;
  }

  template <class S>
  Vec<S> eval_step_deterministic(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                                 const Vec<S> &theta)
  {
    require_dims(theta.size(), model.nb(), "parameter");
    return eval_drift(model, x, u) + eval_basis(model, x, u) * theta;
  }

  template <class S>
  Vec<S> eval_step_truth(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                         const Vec<S> &theta, const VectorXd &w)
  {
    require_dims(w.size(), model.nw(), "noise");
    const VectorXd gw = model.noise_gain() * w;
    return eval_step_deterministic(model, x, u, theta) + gw.cast<S>();
  }

  template <class S>
  Mat<S> eval_basis_jac(const ParamAffineModel &model, const Vec<S> &x, const Vec<S> &u,
                        const Vec<S> &v)
  {
    require_dims(x.size(), model.nx(), "state");
    require_dims(u.size(), model.nu(), "input");
    require_dims(v.size(), model.nb(), "parameter");
    const auto &f = model.functions<S>();
    const int nx = model.nx();

    Mat<S> jac(nx, nx);
    const bool fd_basis = !f.basis_jac_x;
    const bool fd_drift = !f.drift_jac_x;
    if (fd_basis || fd_drift)
    {
      for (int i = 0; i < nx; ++i)
      {
        const double h = std::max(1e-6, 1e-6 * std::abs(ad::value_of(x(i))));
        Vec<S> xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        Vec<S> fp = Vec<S>::Zero(nx), fm = Vec<S>::Zero(nx);
        if (fd_basis)
        {
          fp += f.basis(xp, u) * v;
          fm += f.basis(xm, u) * v;
        }
        if (fd_drift)
        {
          fp += f.drift(xp, u);
          fm += f.drift(xm, u);
        }
        jac.col(i) = (fp - fm) / (2.0 * h);
      }
    }
    else
    {
      jac.setZero();
    }
    if (!fd_basis)
      jac += f.basis_jac_x(x, u, v);
    if (!fd_drift)
      jac += f.drift_jac_x(x, u);
    return jac;
  }

#define DMPC_INSTANTIATE(S)                                                                            \
  template Vec<S> eval_drift<S>(const ParamAffineModel &, const Vec<S> &, const Vec<S> &);              \
  template Mat<S> eval_basis<S>(const ParamAffineModel &, const Vec<S> &, const Vec<S> &);              \
  template Vec<S> eval_step_deterministic<S>(const ParamAffineModel &, const Vec<S> &, const Vec<S> &,  \
                                             const Vec<S> &);                                           \
  template Vec<S> eval_step_truth<S>(const ParamAffineModel &, const Vec<S> &, const Vec<S> &,          \
                                     const Vec<S> &, const VectorXd &);                                 \
  template Mat<S> eval_basis_jac<S>(const ParamAffineModel &, const Vec<S> &, const Vec<S> &,           \
                                    const Vec<S> &);

  DMPC_INSTANTIATE(double)
  DMPC_INSTANTIATE(ad::Var)
#undef DMPC_INSTANTIATE

  StageCost StageCost::quadratic(MatrixXd Q, MatrixXd R)
  {
    require(is_symmetric_psd(Q), "quadratic cost: Q must be symmetric positive semidefinite");
    require(is_symmetric_psd(R), "quadratic cost: R must be symmetric positive semidefinite");
    StageCost c;
    c.kind = Kind::Quadratic;
    c.Q_terminal = Q;
    c.Q = std::move(Q);
    c.R = std::move(R);
    return c;
  }

  StageCost StageCost::linear(VectorXd c)
  {
    require(c.size() > 0, "linear cost: empty weight vector");
    StageCost s;
    s.kind = Kind::Linear;
    s.c_terminal = c;
    s.c = std::move(c);
    return s;
  }

  StageCost StageCost::scaled(double alpha) const
  {
    StageCost s = *this;
    s.Q *= alpha;
    s.R *= alpha;
    s.c *= alpha;
    s.Q_terminal *= alpha;
    s.c_terminal *= alpha;
    return s;
  }

  template <class S>
  S stage_cost(const StageCost &cost, const Vec<S> &x, const Vec<S> &u)
  {
    if (cost.kind == StageCost::Kind::Linear)
    {
      require_dims(x.size(), cost.c.size(), "stage cost state");
      return x.dot(cost.c.cast<S>());
    }
    require_dims(x.size(), cost.Q.rows(), "stage cost state");
    require_dims(u.size(), cost.R.rows(), "stage cost input");
    return x.dot(cost.Q.cast<S>() * x) + u.dot(cost.R.cast<S>() * u);
  }

  template <class S>
  S terminal_cost(const StageCost &cost, const Vec<S> &x)
  {
    if (cost.kind == StageCost::Kind::Linear)
    {
      require_dims(x.size(), cost.c_terminal.size(), "terminal cost state");
      return x.dot(cost.c_terminal.cast<S>());
    }
    require_dims(x.size(), cost.Q_terminal.rows(), "terminal cost state");
    return x.dot(cost.Q_terminal.cast<S>() * x);
  }

  template double stage_cost<double>(const StageCost &, const Vec<double> &, const Vec<double> &);
  template ad::Var stage_cost<ad::Var>(const StageCost &, const Vec<ad::Var> &, const Vec<ad::Var> &);
  template double terminal_cost<double>(const StageCost &, const Vec<double> &);
  template ad::Var terminal_cost<ad::Var>(const StageCost &, const Vec<ad::Var> &);

  InputBounds InputBounds::uniform(int nu, double lo, double hi)
  {
    InputBounds b{VectorXd::Constant(nu, lo), VectorXd::Constant(nu, hi)};
    b.validate(nu);
    return b;
  }

  InputBounds InputBounds::unbounded(int nu)
  {
    const double inf = std::numeric_limits<double>::infinity();
    return {VectorXd::Constant(nu, -inf), VectorXd::Constant(nu, inf)};
  }

  void InputBounds::validate(int nu) const
  {
    require_dims(lower.size(), nu, "input lower bound");
    require_dims(upper.size(), nu, "input upper bound");
    for (int i = 0; i < nu; ++i)
      require(!(lower(i) > upper(i)) && !std::isnan(lower(i)) && !std::isnan(upper(i)),
              "input bounds: lower must not exceed upper");
  }

  bool InputBounds::contains(const VectorXd &u) const
  {
    if (u.size() != lower.size())
      return false;
    return (u.array() >= lower.array()).all() && (u.array() <= upper.array()).all();
  }

  ParamAffineModel make_scalar_gain_model(double noise_var)
  {
    return ParamAffineModel("scalar_gain", {1, 1, 1, 1}, ScalarGain{}, MatrixXd::Identity(1, 1),
                            MatrixXd::Constant(1, 1, noise_var));
  }

  ParamAffineModel make_mountain_car_model(double Ts, double noise_var)
  {
    MatrixXd G(2, 1);
    G << 0.0, 1.0;
    return ParamAffineModel("mountain_car", {2, 1, 2, 1}, MountainCar{Ts}, G, MatrixXd::Constant(1, 1, noise_var));
  }

  std::vector<std::string> builtin_model_names() { return {"scalar_gain", "mountain_car"}; }

  ParamAffineModel make_builtin_model(const std::string &name, const ModelParams &params)
  {
    auto check_keys = [&](std::initializer_list<const char *> allowed) {
      for (const auto &[key, value] : params)
      {
        bool ok = false;
        for (const char *a : allowed)
          ok = ok || key == a;
        require(ok, "model '" + name + "': unknown parameter '" + key + "'");
      }
    };
    if (name == "scalar_gain")
    {
      check_keys({"noise_var"});
      return make_scalar_gain_model(param_or(params, "noise_var", 0.1));
    }
    if (name == "mountain_car")
    {
      check_keys({"Ts", "noise_var"});
      return make_mountain_car_model(param_or(params, "Ts", 7.0), param_or(params, "noise_var", 1e-6));
    }
    throw ContractError("unknown model '" + name + "'");
  }

} // namespace dmpc
