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

// Reverse-mode automatic differentiation on a thread-local tape.
//
// A Var is a value plus an index into the active tape. Operations on Vars
// append one node per elementary operation, holding the local partials with
// respect to at most two parents. The reverse sweep accumulates adjoints from
// the output back to the independent variables. Vars created while no tape is
// recording are constants and never touch the tape.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace dmpc::ad
{

  struct Node
  {
    std::int32_t a;
    std::int32_t b;
    double da;
    double db;
  };

  class Tape
  {
  public:
    static Tape *active() noexcept { return active_; }

    std::int32_t push(std::int32_t a, double da, std::int32_t b, double db)
    {
      nodes_.push_back({a, b, da, db});
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::size_t size() const noexcept { return nodes_.size(); }

    /// Adjoints of every tape entry after seeding `output` with 1.
    std::vector<double> sweep(std::int32_t output) const
    {
      std::vector<double> adj(nodes_.size(), 0.0);
      if (output < 0)
        return adj;
      adj[output] = 1.0;
      for (std::int32_t i = output; i >= 0; --i)
      {
        const double w = adj[i];
        if (w == 0.0)
          continue;
        const Node &n = nodes_[i];
        if (n.a >= 0)
          adj[n.a] += n.da * w;
        if (n.b >= 0)
          adj[n.b] += n.db * w;
      }
      return adj;
    }

  private:
    friend class Recording;
    std::vector<Node> nodes_;
    static thread_local Tape *active_;
  };

  inline thread_local Tape *Tape::active_ = nullptr;

  /// RAII scope that records onto a fresh tape for the current thread.
  class Recording
  {
  public:
    Recording()
    {
      previous_ = Tape::active_;
      tape_.nodes_.reserve(1 << 16);
      Tape::active_ = &tape_;
    }
    ~Recording() { Tape::active_ = previous_; }
    Recording(const Recording &) = delete;
    Recording &operator=(const Recording &) = delete;

    Tape &tape() noexcept { return tape_; }

  private:
    Tape tape_;
    Tape *previous_ = nullptr;
  };

  class Var
  {
  public:
    Var() = default;
    Var(double v) : v_(v) {} // NOLINT: implicit by design of the scalar type
    Var(double v, std::int32_t id) : v_(v), id_(id) {}

    /// New independent variable on the active tape.
    static Var independent(double v)
    {
      Tape *t = Tape::active();
      return t ? Var(v, t->push(-1, 0.0, -1, 0.0)) : Var(v);
    }

    double value() const noexcept { return v_; }
    std::int32_t id() const noexcept { return id_; }
    bool is_constant() const noexcept { return id_ < 0; }

    Var &operator+=(const Var &o) { return *this = *this + o; }
    Var &operator-=(const Var &o) { return *this = *this - o; }
    Var &operator*=(const Var &o) { return *this = *this * o; }
    Var &operator/=(const Var &o) { return *this = *this / o; }

    friend Var unary(double v, const Var &x, double dx)
    {
      if (x.id_ < 0)
        return Var(v);
      Tape *t = Tape::active();
      if (!t)
        return Var(v);
      return Var(v, t->push(x.id_, dx, -1, 0.0));
    }

    friend Var binary(double v, const Var &x, double dx, const Var &y, double dy)
    {
      if (x.id_ < 0)
        return unary(v, y, dy);
      if (y.id_ < 0)
        return unary(v, x, dx);
      Tape *t = Tape::active();
      if (!t)
        return Var(v);
      return Var(v, t->push(x.id_, dx, y.id_, dy));
    }

    friend Var operator+(const Var &x, const Var &y) { return binary(x.v_ + y.v_, x, 1.0, y, 1.0); }
    friend Var operator-(const Var &x, const Var &y) { return binary(x.v_ - y.v_, x, 1.0, y, -1.0); }
    friend Var operator*(const Var &x, const Var &y) { return binary(x.v_ * y.v_, x, y.v_, y, x.v_); }
    friend Var operator/(const Var &x, const Var &y)
    {
      const double q = x.v_ / y.v_;
      return binary(q, x, 1.0 / y.v_, y, -q / y.v_);
    }
    friend Var operator+(const Var &x, double c) { return unary(x.v_ + c, x, 1.0); }
    friend Var operator+(double c, const Var &x) { return unary(c + x.v_, x, 1.0); }
    friend Var operator-(const Var &x, double c) { return unary(x.v_ - c, x, 1.0); }
    friend Var operator-(double c, const Var &x) { return unary(c - x.v_, x, -1.0); }
    friend Var operator*(const Var &x, double c) { return unary(x.v_ * c, x, c); }
    friend Var operator*(double c, const Var &x) { return unary(c * x.v_, x, c); }
    friend Var operator/(const Var &x, double c) { return unary(x.v_ / c, x, 1.0 / c); }
    friend Var operator/(double c, const Var &x)
    {
      const double q = c / x.v_;
      return unary(q, x, -q / x.v_);
    }
    friend Var operator-(const Var &x) { return unary(-x.v_, x, -1.0); }
    friend Var operator+(const Var &x) { return x; }

    friend bool operator<(const Var &x, const Var &y) { return x.v_ < y.v_; }
    friend bool operator>(const Var &x, const Var &y) { return x.v_ > y.v_; }
    friend bool operator<=(const Var &x, const Var &y) { return x.v_ <= y.v_; }
    friend bool operator>=(const Var &x, const Var &y) { return x.v_ >= y.v_; }
    friend bool operator==(const Var &x, const Var &y) { return x.v_ == y.v_; }
    friend bool operator!=(const Var &x, const Var &y) { return x.v_ != y.v_; }

  private:
    double v_ = 0.0;
    std::int32_t id_ = -1;
  };

  inline Var sqrt(const Var &x)
  {
    const double r = std::sqrt(x.value());
    return unary(r, x, 0.5 / r);
  }
  inline Var sin(const Var &x) { return unary(std::sin(x.value()), x, std::cos(x.value())); }
  inline Var cos(const Var &x) { return unary(std::cos(x.value()), x, -std::sin(x.value())); }
  inline Var tanh(const Var &x)
  {
    const double t = std::tanh(x.value());
    return unary(t, x, 1.0 - t * t);
  }
  inline Var exp(const Var &x)
  {
    const double e = std::exp(x.value());
    return unary(e, x, e);
  }
  inline Var log(const Var &x) { return unary(std::log(x.value()), x, 1.0 / x.value()); }
  inline Var abs(const Var &x) { return unary(std::abs(x.value()), x, x.value() < 0.0 ? -1.0 : 1.0); }
  inline Var abs2(const Var &x) { return x * x; }
  inline Var pow(const Var &x, double p)
  {
    const double r = std::pow(x.value(), p);
    return unary(r, x, p * std::pow(x.value(), p - 1.0));
  }
  inline const Var &conj(const Var &x) { return x; }
  inline const Var &real(const Var &x) { return x; }
  inline Var imag(const Var &) { return Var(0.0); }
  inline bool isfinite(const Var &x) { return std::isfinite(x.value()); }
  inline bool isnan(const Var &x) { return std::isnan(x.value()); }
  inline bool isinf(const Var &x) { return std::isinf(x.value()); }

  inline double value_of(double x) { return x; }
  inline double value_of(const Var &x) { return x.value(); }

} // namespace dmpc::ad

namespace Eigen
{
  template <>
  struct NumTraits<dmpc::ad::Var> : NumTraits<double>
  {
    using Real = dmpc::ad::Var;
    using NonInteger = dmpc::ad::Var;
    using Nested = dmpc::ad::Var;
    using Literal = dmpc::ad::Var;
    enum
    {
      IsComplex = 0,
      IsInteger = 0,
      IsSigned = 1,
      RequireInitialization = 1,
      ReadCost = 1,
      AddCost = 3,
      MulCost = 3
    };
  };

  template <typename BinaryOp>
  struct ScalarBinaryOpTraits<dmpc::ad::Var, double, BinaryOp>
  {
    using ReturnType = dmpc::ad::Var;
  };
  template <typename BinaryOp>
  struct ScalarBinaryOpTraits<double, dmpc::ad::Var, BinaryOp>
  {
    using ReturnType = dmpc::ad::Var;
  };
} // namespace Eigen
