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

#pragma once

#include <array>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "dualmpc/ad.hpp"

namespace dmpc
{

  template <class S>
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  template <class S>
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  /// Violated precondition: dimension mismatch, invalid argument, singular input.
  class ContractError : public std::invalid_argument
  {
  public:
    using std::invalid_argument::invalid_argument;
  };

  /// Cholesky factorization failed for every jitter in the schedule.
  class FactorizationError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// Non-finite objective or gradient.
  class NumericalError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  inline void require(bool ok, const std::string &what)
  {
    if (!ok)
      throw ContractError(what);
  }

  inline void require_dims(Eigen::Index got, Eigen::Index want, const char *what)
  {
    if (got != want)
    {
      std::ostringstream os;
      os << what << ": expected dimension " << want << ", got " << got;
      throw ContractError(os.str());
    }
  }

  inline constexpr std::array<double, 4> kJitterSchedule{0.0, 1e-12, 1e-10, 1e-8};

  template <class S>
  Mat<S> symmetrize(const Mat<S> &m)
  {
    return (m + m.transpose()) * S(0.5);
  }

  /// Lower Cholesky factor of `a`, or false when a pivot is not positive.
  template <class S>
  bool try_cholesky(const Mat<S> &a, Mat<S> &l)
  {
    const Eigen::Index n = a.rows();
    l = Mat<S>::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
    {
      S d = a(j, j);
      for (Eigen::Index k = 0; k < j; ++k)
        d -= l(j, k) * l(j, k);
      if (!(ad::value_of(d) > 0.0))
        return false;
      using std::sqrt;
      l(j, j) = sqrt(d);
      for (Eigen::Index i = j + 1; i < n; ++i)
      {
        S s = a(i, j);
        for (Eigen::Index k = 0; k < j; ++k)
          s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    return true;
  }

  /// Lower-triangular L with L L^T = cov + eps I for the first eps in the
  /// schedule that factorizes.
  template <class S>
  Mat<S> chol_spd(const Mat<S> &cov, std::span<const double> jitters = kJitterSchedule)
  {
    require(cov.rows() == cov.cols(), "chol_spd: matrix must be square");
    Mat<S> l;
    for (double eps : jitters)
    {
      Mat<S> a = cov;
      if (eps != 0.0)
        a.diagonal().array() += S(eps);
      if (try_cholesky(a, l))
        return l;
    }
    std::ostringstream os;
    os << "chol_spd: matrix is not positive definite under any jitter:\n";
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
    {
      for (Eigen::Index j = 0; j < cov.cols(); ++j)
        os << (j ? " " : "  ") << ad::value_of(cov(i, j));
      os << "\n";
    }
    throw FactorizationError(os.str());
  }

  /// Solve L y = b in place (L lower triangular).
  template <class S>
  void forward_substitute(const Mat<S> &l, Mat<S> &b)
  {
    const Eigen::Index n = l.rows();
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index i = 0; i < n; ++i)
      {
        S s = b(i, c);
        for (Eigen::Index k = 0; k < i; ++k)
          s -= l(i, k) * b(k, c);
        b(i, c) = s / l(i, i);
      }
  }

  /// Inverse of a symmetric positive definite matrix via its jittered Cholesky factor.
  template <class S>
  Mat<S> spd_inverse(const Mat<S> &a)
  {
    const Mat<S> l = chol_spd(a);
    Mat<S> linv = Mat<S>::Identity(a.rows(), a.rows());
    forward_substitute(l, linv);
    return symmetrize<S>(linv.transpose() * linv);
  }

  inline VectorXd values(const Vec<double> &v) { return v; }
  inline MatrixXd values(const Mat<double> &m) { return m; }
  inline VectorXd values(const Vec<ad::Var> &v)
  {
    return v.unaryExpr([](const ad::Var &x) { return x.value(); });
  }
  inline MatrixXd values(const Mat<ad::Var> &m)
  {
    return m.unaryExpr([](const ad::Var &x) { return x.value(); });
  }

} // namespace dmpc
