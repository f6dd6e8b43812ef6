// Copyright 2026 The icschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace icschaos {

/// One-based node index, as used in edge lists and reports. Use slot() for
/// zero-based matrix access.
struct NodeId {
  std::size_t index = 1;

  constexpr std::size_t slot() const { return index - 1; }
  static constexpr NodeId from_slot(std::size_t s) { return NodeId{s + 1}; }

  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct WeightedEdge {
  NodeId from;
  NodeId to;
  double weight = 1.0;
};

/// Directed weighted graph on nodes {1..m}. An edge (i, j) with weight a_ij
/// means node i receives information from node j, so information flows
/// j => i. Immutable after construction.
class Topology {
 public:
  Topology(std::size_t node_count, const std::vector<WeightedEdge>& edges);

  /// Validates a dense adjacency matrix: non-negative, finite, zero diagonal.
  static Topology from_adjacency(const Eigen::MatrixXd& adjacency);

  std::size_t size() const { return static_cast<std::size_t>(adjacency_.rows()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  double weight(NodeId i, NodeId j) const { return adjacency_(i.slot(), j.slot()); }
  bool has_edge(NodeId i, NodeId j) const { return weight(i, j) > 0.0; }
  std::vector<WeightedEdge> edges() const;
  bool is_symmetric() const;

 private:
  explicit Topology(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {}

  Eigen::MatrixXd adjacency_;
};

/// L_ij = -a_ij off the diagonal, L_ii = sum of row i's off-diagonal weights.
Eigen::MatrixXd laplacian(const Topology& t);

/// Row sums accumulated as (sum of off-diagonal entries in column order) plus
/// the diagonal. For a matrix built by laplacian() this is exactly 0.
Eigen::VectorXd laplacian_row_sums(const Eigen::MatrixXd& L);

/// Nodes whose information reaches every node, following j => i for a_ij > 0.
/// Pure graph search.
std::set<NodeId> globally_reachable_nodes(const Topology& t);

struct SpectralSummary {
  std::vector<std::complex<double>> eigenvalues;
  std::size_t zero_multiplicity = 0;
  /// Present iff zero_multiplicity == 1; sums to one.
  std::optional<Eigen::VectorXd> left_null_vector;
  Eigen::VectorXd right_null_vector;
  /// Absolute threshold actually used for |lambda| == 0.
  double zero_threshold = 0.0;
};

inline constexpr double kDefaultSpectralTol = 1e-9;

/// Throws EigenSolveFailure if the eigensolver does not converge.
SpectralSummary spectral_summary(const Topology& t, double tol = kDefaultSpectralTol);

struct ReachabilityReport {
  std::set<NodeId> reachable;                 // combinatorial verdict
  bool simple_zero = false;                   // algebraic verdict
  std::optional<std::set<NodeId>> support;    // {j : x_L[j] > tol}
  bool min_entry_ok = true;                   // x_L >= -tol
  bool agree = false;
  std::string detail;
};

ReachabilityReport check_reachability(const Topology& t, double tol = kDefaultSpectralTol);

}  // namespace icschaos
