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

#include "dualmpc/tree.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace dmpc
{

  TreeShape build_tree_shape(int L, int Ns)
  {
    require(L >= 1, "build_tree_shape: L must be at least 1");
    require(Ns >= 1, "build_tree_shape: Ns must be at least 1");
    TreeShape s;
    s.L = L;
    s.Ns = Ns;
    s.depth_offsets.resize(L + 2);
    long long count = 1, offset = 0;
    for (int k = 0; k <= L; ++k)
    {
      s.depth_offsets[k] = static_cast<int>(offset);
      offset += count;
      require(offset < (1LL << 30), "build_tree_shape: tree too large");
      count *= Ns;
    }
    s.depth_offsets[L + 1] = static_cast<int>(offset);
    s.total_nodes = static_cast<int>(offset);
    s.parent.assign(s.total_nodes, -1);
    for (int k = 1; k <= L; ++k)
      for (int j = 0; j < s.nodes_at(k); ++j)
        s.parent[s.depth_offsets[k] + j] = s.depth_offsets[k - 1] + j / Ns;
    return s;
  }

  int TreeShape::depth_of(int node) const
  {
    require(node >= 0 && node < total_nodes, "tree: node index out of range");
    int k = 0;
    while (depth_offsets[k + 1] <= node)
      ++k;
    return k;
  }

  int TreeShape::first_child(int node) const
  {
    const int k = depth_of(node);
    require(k < L, "tree: leaves have no children");
    return depth_offsets[k + 1] + (node - depth_offsets[k]) * Ns;
  }

  int TreeShape::initial_branch(int node) const
  {
    if (node == 0)
      return -1;
    while (parent[node] != 0)
      node = parent[node];
    return node - 1;
  }

  template <class S>
  TreeStateT<S> rollout_dual(const ParamAffineModel &model, const StageCost &cost, const TreeShape &shape,
                             const VectorXd &root_state, const GaussianBelief &root_belief,
                             const std::vector<Vec<S>> &dual_inputs, const std::vector<BaseSample> &samples)
  {
    const int nb = model.nb();
    require_dims(root_state.size(), model.nx(), "rollout_dual: root state");
    require_dims(root_belief.mean.size(), nb, "rollout_dual: root belief");
    require(static_cast<int>(dual_inputs.size()) == shape.interior_nodes(),
            "rollout_dual: one input per interior node required");
    require(static_cast<int>(samples.size()) == shape.edges(), "rollout_dual: one base sample per edge required");

    const auto &rows = model.informative_rows();
    const int m = static_cast<int>(rows.size());
    const Mat<S> noise_prec = model.noise_prec_eff().cast<S>();

    TreeStateT<S> t;
    t.states.resize(shape.total_nodes);
    t.beliefs.resize(shape.total_nodes);
    t.thetas.resize(shape.total_nodes);
    t.inputs = dual_inputs;
    t.stage_costs.assign(shape.L, S(0));
    t.states[0] = root_state.cast<S>();
    t.beliefs[0] = lift<S>(root_belief);

    for (int k = 0; k < shape.L; ++k)
    {
      const double weight = 1.0 / static_cast<double>(shape.nodes_at(k));
      for (int node = shape.depth_offsets[k]; node < shape.depth_offsets[k + 1]; ++node)
      {
        const Vec<S> &x = t.states[node];
        const Vec<S> &u = dual_inputs[node];
        const GaussianBeliefT<S> &prior = t.beliefs[node];
        t.stage_costs[k] += weight * stage_cost(cost, x, u);

        const Vec<S> g = eval_drift(model, x, u);
        const Mat<S> phi = eval_basis(model, x, u);
        const Mat<S> chol = chol_spd<S>(prior.cov);

        // The posterior covariance depends only on (x, u), so all children share it.
        Mat<S> phi_eff(m, nb);
        for (int r = 0; r < m; ++r)
          phi_eff.row(r) = phi.row(rows[r]);
        const Mat<S> prior_prec = spd_inverse<S>(prior.cov);
        const Mat<S> ht_sinv = phi_eff.transpose() * noise_prec;
        const Mat<S> post_cov = spd_inverse<S>(symmetrize<S>(prior_prec + ht_sinv * phi_eff));
        const Vec<S> prior_info = prior_prec * prior.mean;

        const int child0 = shape.first_child(node);
        for (int c = 0; c < shape.Ns; ++c)
        {
          const int child = child0 + c;
          const BaseSample &z = samples[child - 1];
          require_dims(z.z_theta.size(), nb, "rollout_dual: z_theta");
          require_dims(z.z_w.size(), model.nw(), "rollout_dual: z_w");
          Vec<S> theta = prior.mean + chol * z.z_theta.cast<S>();
          const VectorXd gw = model.noise_gain() * (model.noise_chol() * z.z_w);
          Vec<S> x_next = g + phi * theta + gw.cast<S>();

          Vec<S> residual(m);
          for (int r = 0; r < m; ++r)
            residual(r) = x_next(rows[r]) - g(rows[r]);
          GaussianBeliefT<S> post;
          post.cov = post_cov;
          post.mean = post_cov * (prior_info + ht_sinv * residual);

          t.thetas[child] = std::move(theta);
          t.states[child] = std::move(x_next);
          t.beliefs[child] = std::move(post);
        }
      }
    }
    for (const S &c : t.stage_costs)
      t.dual_cost += c;
    return t;
  }

  template TreeStateT<double> rollout_dual<double>(const ParamAffineModel &, const StageCost &, const TreeShape &,
                                                   const VectorXd &, const GaussianBelief &,
                                                   const std::vector<Vec<double>> &,
                                                   const std::vector<BaseSample> &);
  template TreeStateT<ad::Var> rollout_dual<ad::Var>(const ParamAffineModel &, const StageCost &,
                                                     const TreeShape &, const VectorXd &,
                                                     const GaussianBelief &, const std::vector<Vec<ad::Var>> &,
                                                     const std::vector<BaseSample> &);

  TreeState tree_values(const TreeStateT<ad::Var> &t)
  {
    TreeState out;
    for (const auto &x : t.states)
      out.states.push_back(values(x));
    for (const auto &b : t.beliefs)
      out.beliefs.push_back(belief_values(b));
    for (const auto &th : t.thetas)
      out.thetas.push_back(values(th));
    for (const auto &u : t.inputs)
      out.inputs.push_back(values(u));
    for (const auto &c : t.stage_costs)
      out.stage_costs.push_back(c.value());
    out.dual_cost = t.dual_cost.value();
    return out;
  }

  namespace
  {
    void put(std::ostream &os, double v)
    {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ' ' << buf;
    }
  } // namespace

  void write_tree_dump(std::ostream &os, const TreeShape &shape, const TreeState &state)
  {
    require(static_cast<int>(state.states.size()) == shape.total_nodes, "write_tree_dump: state/shape mismatch");
    const Eigen::Index nx = state.states[0].size();
    const Eigen::Index nb = state.beliefs[0].mean.size();
    const Eigen::Index nu = state.inputs.empty() ? 0 : state.inputs[0].size();
    os << "# dualmpc-tree v1 L=" << shape.L << " Ns=" << shape.Ns << " nx=" << nx << " nb=" << nb
       << " nu=" << nu << "\n";
    os << "# node depth parent x[nx] mean[nb] cov[nb*nb] u[nu]\n";
    for (int n = 0; n < shape.total_nodes; ++n)
    {
      os << n << ' ' << shape.depth_of(n) << ' ' << shape.parent[n];
      for (Eigen::Index i = 0; i < nx; ++i)
        put(os, state.states[n](i));
      for (Eigen::Index i = 0; i < nb; ++i)
        put(os, state.beliefs[n].mean(i));
      for (Eigen::Index i = 0; i < nb; ++i)
        for (Eigen::Index j = 0; j < nb; ++j)
          put(os, state.beliefs[n].cov(i, j));
      for (Eigen::Index i = 0; i < nu; ++i)
        put(os, n < shape.interior_nodes() ? state.inputs[n](i) : std::numeric_limits<double>::quiet_NaN());
      os << '\n';
    }
  }

  std::vector<TreeDumpRow> read_tree_dump(std::istream &is)
  {
    std::string line;
    int lineno = 0;
    long nx = -1, nb = -1, nu = -1;
    std::vector<TreeDumpRow> rows;
    auto fail = [&](const std::string &why) {
      throw ContractError("tree dump line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(is, line))
    {
      ++lineno;
      if (line.empty())
        continue;
      if (line[0] == '#')
      {
        if (line.rfind("# dualmpc-tree v1", 0) == 0)
        {
          long L = 0, Ns = 0;
          if (std::sscanf(line.c_str(), "# dualmpc-tree v1 L=%ld Ns=%ld nx=%ld nb=%ld nu=%ld", &L, &Ns, &nx, &nb,
                          &nu) != 5)
            fail("bad header");
        }
        continue;
      }
      if (nx < 0)
        fail("missing header");
      std::istringstream ss(line);
      TreeDumpRow r;
      auto num = [&]() {
        std::string tok;
        if (!(ss >> tok))
          fail("too few fields");
        try
        {
          std::size_t used = 0;
          const double v = std::stod(tok, &used);
          if (used != tok.size())
            fail("bad number '" + tok + "'");
          return v;
        }
        catch (const std::logic_error &)
        {
          fail("bad number '" + tok + "'");
        }
        return 0.0;
      };
      r.node = static_cast<int>(num());
      r.depth = static_cast<int>(num());
      r.parent = static_cast<int>(num());
      r.x.resize(nx);
      for (long i = 0; i < nx; ++i)
        r.x(i) = num();
      r.mean.resize(nb);
      for (long i = 0; i < nb; ++i)
        r.mean(i) = num();
      r.cov.resize(nb, nb);
      for (long i = 0; i < nb; ++i)
        for (long j = 0; j < nb; ++j)
          r.cov(i, j) = num();
      r.u.resize(nu);
      for (long i = 0; i < nu; ++i)
        r.u(i) = num();
      std::string extra;
      if (ss >> extra)
        fail("trailing fields");
      rows.push_back(std::move(r));
    }
    return rows;
  }

} // namespace dmpc
