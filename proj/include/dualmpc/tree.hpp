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

// Complete Ns-ary scenario tree over the dual horizon and its rollout.
//
// Nodes are stored depth-major in one flat array. The children of the node
// with local index j at depth k are the local indices j*Ns .. j*Ns+Ns-1 at
// depth k+1. The edge entering node n > 0 has index n-1.

#pragma once

#include <iosfwd>
#include <vector>

#include "dualmpc/belief.hpp"
#include "dualmpc/model.hpp"

namespace dmpc
{

  struct TreeShape
  {
    int L = 0;
    int Ns = 0;
    std::vector<int> depth_offsets; ///< L+2 entries; the last equals total_nodes
    std::vector<int> parent;        ///< -1 for the root
    int total_nodes = 0;

    int nodes_at(int depth) const { return depth_offsets[depth + 1] - depth_offsets[depth]; }
    int depth_of(int node) const;
    int first_child(int node) const;
    int interior_nodes() const { return depth_offsets[L]; }
    int leaves() const { return nodes_at(L); }
    int edges() const { return total_nodes - 1; }
    /// Index of the depth-1 ancestor of `node` (the initial branch), or -1 for the root.
    int initial_branch(int node) const;
  };

  TreeShape build_tree_shape(int L, int Ns);

  template <class S>
  struct TreeStateT
  {
    std::vector<Vec<S>> states;
    std::vector<GaussianBeliefT<S>> beliefs;
    /// Parameter sample on the edge into each node (empty for the root).
    std::vector<Vec<S>> thetas;
    /// Input applied at each interior node.
    std::vector<Vec<S>> inputs;
    /// (1/Ns^k) sum_j l_k(x_k^j, u_k^j) for k = 0..L-1.
    std::vector<S> stage_costs;
    S dual_cost = S(0);
  };

  using TreeState = TreeStateT<double>;

  /// Expand the tree from the root under fixed base samples: each edge draws
  /// theta = mu + chol(Sigma) z_theta from the parent belief and
  /// w = chol(Sigma_w) z_w, steps the model, and conditions the parent
  /// belief on the resulting transition.
  template <class S>
  TreeStateT<S> rollout_dual(const ParamAffineModel &model, const StageCost &cost, const TreeShape &shape,
                             const VectorXd &root_state, const GaussianBelief &root_belief,
                             const std::vector<Vec<S>> &dual_inputs, const std::vector<BaseSample> &samples);

  TreeState tree_values(const TreeStateT<ad::Var> &t);
  inline const TreeState &tree_values(const TreeState &t) { return t; }

  /// Line-oriented dump: one row per node with id, depth, parent, state,
  /// belief mean, row-major belief covariance and node input (nan at leaves).
  void write_tree_dump(std::ostream &os, const TreeShape &shape, const TreeState &state);

  struct TreeDumpRow
  {
    int node = 0;
    int depth = 0;
    int parent = -1;
    VectorXd x;
    VectorXd mean;
    MatrixXd cov;
    VectorXd u;
  };

  /// Parse a dump; malformed content raises ContractError naming the line.
  std::vector<TreeDumpRow> read_tree_dump(std::istream &is);

} // namespace dmpc
