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

#include <doctest.h>

#include "dualmpc/ad.hpp"
#include "dualmpc/linalg.hpp"
#include "generators.hpp"

using dmpc::ad::Recording;
using dmpc::ad::Var;

namespace
{

  template <class S>
  S mixed(const S &x, const S &y)
  {
    using std::exp;
    using std::sin;
    using std::sqrt;
    using std::tanh;
    return sin(x) * exp(y) / (1.0 + x * x) + sqrt(y) * tanh(x) - 3.0 / y;
  }

  std::pair<double, double> grad_mixed(double x, double y)
  {
    Recording rec;
    const Var vx = Var::independent(x), vy = Var::independent(y);
    const Var f = mixed(vx, vy);
    const auto adj = rec.tape().sweep(f.id());
    return {adj[vx.id()], adj[vy.id()]};
  }

} // namespace

TEST_CASE("reverse sweep matches the analytic derivative of a mixed expression")
{
  gen::Rng rng(11);
  for (int t = 0; t < 50; ++t)
  {
    const double x = rng.uniform(-2, 2), y = rng.uniform(0.2, 3);
    const auto [gx, gy] = grad_mixed(x, y);
    const double d = 1.0 + x * x;
    const double ex = std::exp(y);
    const double ax = (std::cos(x) * ex * d - std::sin(x) * ex * 2 * x) / (d * d) +
                      std::sqrt(y) * (1 - std::tanh(x) * std::tanh(x));
    const double ay = std::sin(x) * ex / d + 0.5 / std::sqrt(y) * std::tanh(x) + 3.0 / (y * y);
    CHECK(gx == doctest::Approx(ax).epsilon(1e-12));
    CHECK(gy == doctest::Approx(ay).epsilon(1e-12));
  }
}

TEST_CASE("constants and values outside a recording never touch a tape")
{
  const Var a = 2.0, b = Var::independent(3.0);
  CHECK(a.is_constant());
  CHECK(b.is_constant());
  CHECK((a * b + 1.0).value() == 7.0);

  Recording rec;
  const Var c = Var::independent(1.5);
  const Var k = 4.0;
  const std::size_t before = rec.tape().size();
  const Var d = k * k + 2.0;
  CHECK(rec.tape().size() == before);
  const Var e = c * d;
  CHECK(rec.tape().size() == before + 1);
  CHECK(rec.tape().sweep(e.id())[c.id()] == 18.0);
}

TEST_CASE("recordings nest and restore the outer tape")
{
  Recording outer;
  const Var x = Var::independent(2.0);
  {
    Recording inner;
    CHECK(dmpc::ad::Tape::active() == &inner.tape());
  }
  CHECK(dmpc::ad::Tape::active() == &outer.tape());
  const Var y = x * x;
  CHECK(outer.tape().sweep(y.id())[x.id()] == 4.0);
}

TEST_CASE("cholesky factor of small reference matrices")
{
  dmpc::MatrixXd a(1, 1);
  a << 10;
  CHECK(dmpc::chol_spd<double>(a)(0, 0) == doctest::Approx(3.162278).epsilon(1e-6));

  dmpc::MatrixXd b(2, 2);
  b << 4, 2, 2, 2;
  const dmpc::MatrixXd l = dmpc::chol_spd<double>(b);
  dmpc::MatrixXd want(2, 2);
  want << 2, 0, 1, 1;
  CHECK((l - want).norm() < 1e-14);
  CHECK((l * l.transpose() - b).norm() < 1e-14);
}

TEST_CASE("cholesky reconstructs random SPD matrices and is lower triangular")
{
  gen::Rng rng(5);
  for (int t = 0; t < 40; ++t)
  {
    const int n = rng.integer(1, 6);
    const dmpc::MatrixXd a = rng.spd(n, rng.log_uniform(1e-3, 1e3));
    const dmpc::MatrixXd l = dmpc::chol_spd<double>(a);
    CHECK(gen::rel_err(l * l.transpose(), a) < 1e-12);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        CHECK(l(i, j) == 0.0);
  }
}

TEST_CASE("jitter rescues a singular PSD matrix; indefinite input is reported")
{
  dmpc::MatrixXd s(2, 2);
  s << 1, 1, 1, 1;
  const dmpc::MatrixXd l = dmpc::chol_spd<double>(s);
  CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-7);

  dmpc::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(dmpc::chol_spd<double>(bad), dmpc::FactorizationError);
  try
  {
    dmpc::chol_spd<double>(bad);
  }
  catch (const dmpc::FactorizationError &e)
  {
    CHECK(std::string(e.what()).find("1 2") != std::string::npos);
  }
}

TEST_CASE("taped cholesky differentiates like finite differences")
{
  gen::Rng rng(8);
  const dmpc::MatrixXd a0 = rng.spd(3);
  const dmpc::MatrixXd w = rng.spd(3);
  auto f = [&](double s) {
    const dmpc::MatrixXd l = dmpc::chol_spd<double>(dmpc::MatrixXd(a0 + s * w));
    return l.sum();
  };
  Recording rec;
  const Var s = Var::independent(0.0);
  const dmpc::Mat<Var> a = a0.cast<Var>() + w.cast<Var>() * s;
  const Var out = dmpc::chol_spd<Var>(a).sum();
  const double g = rec.tape().sweep(out.id())[s.id()];
  const double h = 1e-6;
  CHECK(g == doctest::Approx((f(h) - f(-h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("spd_inverse is symmetric and inverts")
{
  gen::Rng rng(9);
  for (int t = 0; t < 20; ++t)
  {
    const int n = rng.integer(1, 5);
    const dmpc::MatrixXd a = rng.spd(n);
    const dmpc::MatrixXd inv = dmpc::spd_inverse<double>(a);
    CHECK((inv - inv.transpose()).norm() == 0.0);
    CHECK(gen::rel_err(a * inv, dmpc::MatrixXd::Identity(n, n)) < 1e-10);
  }
}
