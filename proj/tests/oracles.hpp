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

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's update, propagation or tree code.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  struct Moments1
  {
    double mean;
    double var;
  };

  /// Posterior moments of theta ~ N(mu, s2) observed through r = phi theta + e,
  /// e ~ N(0, noise), by trapezoid quadrature of the unnormalized density.
  /// The grid is re-centred on the running estimate until it resolves the peak.
  inline Moments1 grid_bayes_1d(double mu, double s2, double phi, double noise, double r, int points = 4001)
  {
    auto logp = [&](double t) {
      const double e = r - phi * t;
      return -0.5 * (t - mu) * (t - mu) / s2 - 0.5 * e * e / noise;
    };
    double centre = mu, half = 14.0 * std::sqrt(s2);
    Moments1 m{mu, s2};
    for (int pass = 0; pass < 6; ++pass)
    {
      const double h = 2.0 * half / (points - 1);
      std::vector<double> lp(points);
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < points; ++i)
      {
        lp[i] = logp(centre - half + i * h);
        best = std::max(best, lp[i]);
      }
      // Offsets from the centre keep the second moment well conditioned.
      double z = 0, s1 = 0, s2m = 0;
      for (int i = 0; i < points; ++i)
      {
        const double w = std::exp(lp[i] - best) * ((i == 0 || i == points - 1) ? 0.5 : 1.0);
        const double d = -half + i * h;
        z += w;
        s1 += w * d;
        s2m += w * d * d;
      }
      const double dm = s1 / z;
      m = {centre + dm, s2m / z - dm * dm};
      centre = m.mean;
      half = 14.0 * std::max(std::sqrt(std::max(m.var, 0.0)), h);
    }
    return m;
  }

  struct MomentsN
  {
    VectorXd mean;
    MatrixXd cov;
  };

  /// Two-parameter analogue on a tensor grid in coordinates whitened by the
  /// running posterior estimate, with observation r = H theta + e, e ~ N(0, S).
  inline MomentsN grid_bayes_2d(const VectorXd &mu, const MatrixXd &cov, const MatrixXd &H, const MatrixXd &S,
                                const VectorXd &r, int points = 241)
  {
    const MatrixXd P = cov.inverse();
    const MatrixXd Si = S.inverse();
    auto logp = [&](const VectorXd &t) {
      const VectorXd d = t - mu;
      const VectorXd e = r - H * t;
      return -0.5 * d.dot(P * d) - 0.5 * e.dot(Si * e);
    };
    MomentsN m{mu, cov};
    const double half = 12.0;
    const double h = 2.0 * half / (points - 1);
    for (int pass = 0; pass < 6; ++pass)
    {
      const MatrixXd Lw = Eigen::LLT<MatrixXd>(m.cov).matrixL();
      std::vector<double> lp(static_cast<std::size_t>(points) * points);
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j)
        {
          const Eigen::Vector2d s(-half + i * h, -half + j * h);
          lp[i * points + j] = logp(m.mean + Lw * s);
          best = std::max(best, lp[i * points + j]);
        }
      double z = 0;
      Eigen::Vector2d s1 = Eigen::Vector2d::Zero();
      Eigen::Matrix2d s2 = Eigen::Matrix2d::Zero();
      for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j)
        {
          const double wi = (i == 0 || i == points - 1) ? 0.5 : 1.0;
          const double wj = (j == 0 || j == points - 1) ? 0.5 : 1.0;
          const double w = std::exp(lp[i * points + j] - best) * wi * wj;
          const Eigen::Vector2d s(-half + i * h, -half + j * h);
          z += w;
          s1 += w * s;
          s2 += w * s * s.transpose();
        }
      const Eigen::Vector2d ms = s1 / z;
      const Eigen::Matrix2d cs = s2 / z - ms * ms.transpose();
      MomentsN next{m.mean + Lw * ms, Lw * cs * Lw.transpose()};
      next.cov = 0.5 * (next.cov + next.cov.transpose());
      m = next;
    }
    return m;
  }

  /// Exact joint moments of (x, theta) for x+ = x + theta u + w, w ~ N(0, sw).
  struct ScalarJoint
  {
    double mx, mt;
    double pxx, pxt, ptt;

    ScalarJoint step(double u, double sw) const
    {
      return {mx + mt * u, mt, pxx + 2.0 * u * pxt + u * u * ptt + sw, pxt + u * ptt, ptt};
    }
  };

  /// Textbook scalar conjugate update after observing x -> xn under u.
  inline Moments1 scalar_posterior(double mu, double s2, double u, double sw, double x, double xn)
  {
    const double prec = 1.0 / s2 + u * u / sw;
    const double var = 1.0 / prec;
    return {var * (mu / s2 + u * (xn - x) / sw), var};
  }

  /// Closed-form expected cost of a scalar tail: sum_k Q E[x_k^2] + R u_k^2 plus Q E[x_N^2].
  inline double scalar_tail_cost(double x, double mu, double s2, const std::vector<double> &u, double sw, double Q,
                                 double R)
  {
    ScalarJoint j{x, mu, 0.0, 0.0, s2};
    double c = 0;
    for (double uk : u)
    {
      c += Q * (j.mx * j.mx + j.pxx) + R * uk * uk;
      j = j.step(uk, sw);
    }
    return c + Q * (j.mx * j.mx + j.pxx);
  }

  struct McEstimate
  {
    double mean;
    double stderr_;
  };

  /// Monte-Carlo estimate of E[x^T Q x] + u^T R u for x ~ N(mean, cov).
  inline McEstimate mc_quadratic_cost(const VectorXd &mean, const MatrixXd &cov, const MatrixXd &Q,
                                      const MatrixXd &R, const VectorXd &u, long samples, std::uint64_t seed)
  {
    const MatrixXd Lc = Eigen::LLT<MatrixXd>(cov).matrixL();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    const double uc = u.dot(R * u);
    double s = 0, ss = 0;
    VectorXd z(mean.size());
    for (long i = 0; i < samples; ++i)
    {
      for (Eigen::Index k = 0; k < z.size(); ++k)
        z(k) = nd(gen);
      const VectorXd x = mean + Lc * z;
      const double c = x.dot(Q * x) + uc;
      s += c;
      ss += c * c;
    }
    const double m = s / samples;
    const double var = std::max(0.0, ss / samples - m * m);
    return {m, std::sqrt(var / samples)};
  }

  /// Minimizer of 0.5 v^T H v + g^T v over a box by enumerating every
  /// assignment of variables to {free, lower, upper} and keeping the KKT point.
  inline VectorXd box_qp_enumerate(const MatrixXd &H, const VectorXd &g, const VectorXd &lo, const VectorXd &hi)
  {
    const int n = static_cast<int>(g.size());
    long total = 1;
    for (int i = 0; i < n; ++i)
      total *= 3;
    VectorXd best;
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<int> state(n);
    for (long code = 0; code < total; ++code)
    {
      long c = code;
      std::vector<int> free_idx;
      VectorXd v = VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
      {
        state[i] = static_cast<int>(c % 3);
        c /= 3;
        if (state[i] == 0)
          free_idx.push_back(i);
        else
          v(i) = state[i] == 1 ? lo(i) : hi(i);
      }
      const int nf = static_cast<int>(free_idx.size());
      if (nf > 0)
      {
        MatrixXd Hf(nf, nf);
        VectorXd rhs(nf);
        for (int a = 0; a < nf; ++a)
        {
          rhs(a) = -g(free_idx[a]);
          for (int i = 0; i < n; ++i)
            if (state[i] != 0)
              rhs(a) -= H(free_idx[a], i) * v(i);
          for (int b = 0; b < nf; ++b)
            Hf(a, b) = H(free_idx[a], free_idx[b]);
        }
        const VectorXd vf = Hf.ldlt().solve(rhs);
        for (int a = 0; a < nf; ++a)
          v(free_idx[a]) = vf(a);
      }
      bool ok = true;
      const VectorXd grad = H * v + g;
      for (int i = 0; i < n && ok; ++i)
      {
        if (state[i] == 0)
          ok = v(i) >= lo(i) - 1e-12 && v(i) <= hi(i) + 1e-12;
        else if (state[i] == 1)
          ok = grad(i) >= -1e-9;
        else
          ok = grad(i) <= 1e-9;
      }
      if (!ok)
        continue;
      const double f = 0.5 * v.dot(H * v) + g.dot(v);
      if (f < best_f)
      {
        best_f = f;
        best = v;
      }
    }
    return best;
  }

  /// Optimal first input of the unconstrained finite-horizon problem
  /// x+ = a x + b u, cost sum_k q x_k^2 + r u_k^2 + q x_N^2, by the Riccati recursion.
  inline double lqr_first_input(double a, double b, double q, double r, int N, double x0)
  {
    double P = q, K = 0;
    for (int k = N - 1; k >= 0; --k)
    {
      K = a * b * P / (r + b * b * P);
      P = q + a * a * P - a * b * P * K;
    }
    return -K * x0;
  }

  /// Minimum of a scalar function on [lo, hi]: coarse scan, then golden-section
  /// search in the bracket around the best scan point.
  inline std::pair<double, double> minimize_scalar(const std::function<double(double)> &f, double lo, double hi,
                                                   int scan = 41, double tol = 1e-9)
  {
    double best_x = lo, best_f = std::numeric_limits<double>::infinity();
    const double h = (hi - lo) / (scan - 1);
    for (int i = 0; i < scan; ++i)
    {
      const double x = lo + i * h;
      const double fx = f(x);
      if (fx < best_f)
      {
        best_f = fx;
        best_x = x;
      }
    }
    double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol)
    {
      if (fc < fd)
      {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      }
      else
      {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = f(d);
      }
    }
    const double xm = 0.5 * (a + b);
    const double fm = f(xm);
    if (fm <= best_f)
      return {xm, fm};
    return {best_x, best_f};
  }

} // namespace oracle
