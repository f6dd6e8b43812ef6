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

#include "icschaos/topology.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "icschaos/errors.hpp"

namespace icschaos {

Topology::Topology(std::size_t node_count, const std::vector<WeightedEdge>& edges)
    : adjacency_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(node_count),
                                       static_cast<Eigen::Index>(node_count))) {
  if (node_count == 0) throw InvalidArgument("topology needs at least one node");
  for (const auto& e : edges) {
    if (e.from.index < 1 || e.from.index > node_count || e.to.index < 1 ||
        e.to.index > node_count) {
      throw InvalidArgument("edge endpoint out of range");
    }
    if (e.from == e.to) throw InvalidArgument("self-loops are not allowed");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidArgument("edge weights must be positive and finite");
    }
    double& slot = adjacency_(e.from.slot(), e.to.slot());
    if (slot != 0.0) throw InvalidArgument("duplicate edge");
    slot = e.weight;
  }
}

Topology Topology::from_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() == 0 || adjacency.rows() != adjacency.cols()) {
    throw InvalidArgument("adjacency must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    if (adjacency(i, i) != 0.0) throw InvalidArgument("self-loops are not allowed");
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      double a = adjacency(i, j);
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw InvalidArgument("adjacency entries must be finite and non-negative");
      }
    }
  }
  return Topology(adjacency);
}

std::vector<WeightedEdge> Topology::edges() const {
  std::vector<WeightedEdge> out;
  for (Eigen::Index i = 0; i < adjacency_.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency_.cols(); ++j) {
      if (adjacency_(i, j) > 0.0) {
        out.push_back({NodeId::from_slot(static_cast<std::size_t>(i)),
                       NodeId::from_slot(static_cast<std::size_t>(j)), adjacency_(i, j)});
      }
    }
  }
  return out;
}

bool Topology::is_symmetric() const { return adjacency_ == adjacency_.transpose(); }

Eigen::MatrixXd laplacian(const Topology& t) {
  const Eigen::MatrixXd& A = t.adjacency();
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd L(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double off_sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      L(i, j) = -A(i, j);
      off_sum += L(i, j);
    }
    L(i, i) = -off_sum;
  }
  return L;
}

Eigen::VectorXd laplacian_row_sums(const Eigen::MatrixXd& L) {
  Eigen::VectorXd sums(L.rows());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    double off_sum = 0.0;
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      if (j != i) off_sum += L(i, j);
    }
    sums(i) = off_sum + L(i, i);
  }
  return sums;
}

std::set<NodeId> globally_reachable_nodes(const Topology& t) {
  const std::size_t m = t.size();
  const Eigen::MatrixXd& A = t.adjacency();
  std::set<NodeId> result;
  std::vector<char> seen(m);
  std::deque<std::size_t> frontier;
  for (std::size_t root = 0; root < m; ++root) {
    std::fill(seen.begin(), seen.end(), 0);
    seen[root] = 1;
    frontier.assign(1, root);
    std::size_t reached = 1;
    while (!frontier.empty()) {
      std::size_t j = frontier.front();
      frontier.pop_front();
      // j's information reaches every i that listens to j.
      for (std::size_t i = 0; i < m; ++i) {
        if (!seen[i] && A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
          seen[i] = 1;
          ++reached;
          frontier.push_back(i);
        }
      }
    }
    if (reached == m) result.insert(NodeId::from_slot(root));
  }
  return result;
}

SpectralSummary spectral_summary(const Topology& t, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("spectral tolerance must be positive");
  const Eigen::MatrixXd L = laplacian(t);
  const Eigen::Index m = L.rows();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(L, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw EigenSolveFailure("Laplacian eigenvalue iteration did not converge");
  }

  SpectralSummary out;
  out.zero_threshold = tol * (1.0 + L.cwiseAbs().rowwise().sum().maxCoeff());
  const Eigen::VectorXcd ev = solver.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  for (const auto& lambda : out.eigenvalues) {
    if (std::abs(lambda) <= out.zero_threshold) ++out.zero_multiplicity;
  }
  out.right_null_vector = Eigen::VectorXd::Ones(m);

  if (out.zero_multiplicity == 1) {
    // Left null vector of L is the right singular vector of L^T for the
    // smallest singular value.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.transpose(), Eigen::ComputeFullV);
    Eigen::VectorXd x = svd.matrixV().col(m - 1);
    Eigen::Index big = 0;
    x.cwiseAbs().maxCoeff(&big);
    if (x(big) < 0.0) x = -x;
    x /= x.sum();
    out.left_null_vector = std::move(x);
  }
  return out;
}

namespace {

std::string describe(const std::set<NodeId>& s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto id : s) {
    os << (first ? "" : ",") << id.index;
    first = false;
  }
  os << '}';
  return os.str();
}

}  // namespace

ReachabilityReport check_reachability(const Topology& t, double tol) {
  ReachabilityReport r;
  r.reachable = globally_reachable_nodes(t);
  SpectralSummary s = spectral_summary(t, tol);
  r.simple_zero = s.zero_multiplicity == 1;

  std::ostringstream detail;
  detail << "reachable=" << describe(r.reachable) << " zero_multiplicity=" << s.zero_multiplicity;
  r.agree = r.reachable.empty() != r.simple_zero;

  if (s.left_null_vector) {
    std::set<NodeId> support;
    const Eigen::VectorXd& x = *s.left_null_vector;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (x(j) > tol) support.insert(NodeId::from_slot(static_cast<std::size_t>(j)));
      if (x(j) < -tol) r.min_entry_ok = false;
    }
    detail << " support=" << describe(support);
    if (r.simple_zero && !r.reachable.empty()) {
      r.agree = r.agree && support == r.reachable && r.min_entry_ok;
    }
    r.support = std::move(support);
  }
  r.detail = detail.str();
  return r;
}

}  // namespace icschaos
