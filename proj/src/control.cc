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

#include "icschaos/control.hpp"

#include <algorithm>
#include <cmath>

#include "icschaos/errors.hpp"

namespace icschaos {

std::vector<AgentState> make_agents(const Topology& t, std::span<const double> u0) {
  if (u0.size() != t.size()) throw DimensionMismatch("one initial input per agent");
  const Eigen::MatrixXd& A = t.adjacency();
  std::vector<AgentState> agents;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double row = A.row(static_cast<Eigen::Index>(j)).sum();
    agents.push_back({NodeId::from_slot(j), u0[j], 0.0, row});
  }
  return agents;
}

Eigen::MatrixXd interaction_matrix(const Topology& t, std::span<const AgentState> agents) {
  if (agents.size() != t.size()) throw DimensionMismatch("one agent per topology node");
  Eigen::MatrixXd Q = -t.adjacency();
  for (std::size_t j = 0; j < agents.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    Q(i, i) = agents[j].C;
  }
  return Q;
}

Vector dapi_derivative(const Topology& t, std::span<const AgentState> agents, const Vector& x) {
  const std::size_t m = t.size();
  if (agents.size() != m || static_cast<std::size_t>(x.size()) != m) {
    throw DimensionMismatch("dapi_derivative expects |agents| == m == dim(x)");
  }
  const Eigen::MatrixXd& A = t.adjacency();
  std::vector<double> remote(x.data(), x.data() + x.size());
  Vector out(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    std::vector<double> weights(m);
    for (std::size_t l = 0; l < m; ++l) {
      weights[l] = l == j ? 0.0 : A(row, static_cast<Eigen::Index>(l));
    }
    out(row) = dapi_rate(agents[j], x(row), weights, remote);
  }
  return out;
}

double dapi_rate(const AgentState& agent, double local, std::span<const double> weights,
                 std::span<const double> remote) {
  if (weights.size() != remote.size()) throw DimensionMismatch("weights vs remote values");
  double incoming = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != 0.0) incoming += weights[l] * remote[l];
  }
  return -agent.C * local + incoming + agent.beta;
}

Eigen::MatrixXd assemble_linear_dapi(const Topology& t, std::span<const AgentState> agents,
                                     const Eigen::MatrixXd& plant_a,
                                     const Eigen::MatrixXd& plant_b,
                                     const Eigen::MatrixXd& output_h) {
  const Eigen::Index n = plant_a.rows();
  const auto m = static_cast<Eigen::Index>(t.size());
  if (plant_a.cols() != n || plant_b.rows() != n || plant_b.cols() != m ||
      output_h.rows() != m || output_h.cols() != n) {
    throw DimensionMismatch("linear plant blocks do not match agent count");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + m, n + m);
  out.topLeftCorner(n, n) = plant_a;
  out.topRightCorner(n, m) = plant_b;
  out.bottomLeftCorner(m, n) = -interaction_matrix(t, agents) * output_h;
  return out;
}

Eigen::MatrixXd restrict_to_invariant(const Eigen::MatrixXd& a, const Eigen::VectorXd& w) {
  if (a.rows() != a.cols() || w.size() != a.rows() || w.norm() == 0.0) {
    throw DimensionMismatch("restrict_to_invariant: bad shapes");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd p = q.rightCols(a.rows() - 1);
  return p.transpose() * a * p;
}

// ---------------------------------------------------------------------------

void Disutility::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("barrier weight must be >= 0");
  if (!(low < high)) throw InvalidArgument("disutility box needs low < high");
  if (!std::isfinite(reference)) throw InvalidArgument("reference must be finite");
}

double Disutility::value(double u) const {
  double v = (u - reference) * (u - reference) / (2.0 * alpha);
  if (mu > 0.0) {
    if (std::isfinite(low)) v -= mu * std::log(u - low);
    if (std::isfinite(high)) v -= mu * std::log(high - u);
  }
  return v;
}

double Disutility::slope(double u) const {
  double s = (u - reference) / alpha;
  if (mu > 0.0) {
    if (std::isfinite(low)) s -= mu / (u - low);
    if (std::isfinite(high)) s += mu / (high - u);
  }
  return s;
}

double Disutility::curvature(double u) const {
  double c = 1.0 / alpha;
  if (mu > 0.0) {
    if (std::isfinite(low)) c += mu / ((u - low) * (u - low));
    if (std::isfinite(high)) c += mu / ((high - u) * (high - u));
  }
  return c;
}

namespace {

// Root of z'(u) = q. Without a barrier the box acts as a hard clamp.
double invert_slope(const Disutility& z, double q, int max_iter) {
  const double guess = z.reference + z.alpha * q;
  if (z.mu == 0.0) return std::clamp(guess, z.low, z.high);

  // Bracket [a, b] with slope(a) < q < slope(b); finite bounds are open ends.
  double a = z.low, b = z.high;
  if (!std::isfinite(a)) {
    double w = 1.0 + std::abs(guess);
    a = std::min(guess, std::isfinite(b) ? b : guess) - w;
    while (z.slope(a) >= q) {
      w *= 2.0;
      a -= w;
      if (!std::isfinite(a)) throw NoConvergence("cannot bracket conjugate map from below");
    }
  }
  if (!std::isfinite(b)) {
    double w = 1.0 + std::abs(guess);
    b = std::max(guess, a) + w;
    while (z.slope(b) <= q) {
      w *= 2.0;
      b += w;
      if (!std::isfinite(b)) throw NoConvergence("cannot bracket conjugate map from above");
    }
  }

  double u = (guess > a && guess < b) ? guess : 0.5 * (a + b);
  for (int it = 0; it < max_iter; ++it) {
    const double r = z.slope(u) - q;
    if (r == 0.0) return u;
    if (r > 0.0) b = u; else a = u;
    if (std::nextafter(a, b) >= b) return std::abs(z.slope(a) - q) < std::abs(z.slope(b) - q) ? a : b;
    double next = u - r / z.curvature(u);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == u) return u;
    u = next;
  }
  throw NoConvergence("conjugate map did not converge");
}

double representative_point(const Disutility& z) {
  const bool lo = std::isfinite(z.low), hi = std::isfinite(z.high);
  if (lo && hi) return 0.5 * (z.low + z.high);
  if (lo) return std::max(z.reference, z.low + 1.0);
  if (hi) return std::min(z.reference, z.high - 1.0);
  return z.reference;
}

}  // namespace

double conjugate_gradient_map(const Disutility& z, double q, int max_iter) {
  z.validate();
  return invert_slope(z, q, max_iter);
}

SetpointSolution solve_setpoints(std::span<const Disutility> z, double demand,
                                 const SolverOptions& opt) {
  if (z.empty()) throw InvalidArgument("no disutility functions");
  double low_sum = 0.0, high_sum = 0.0;
  for (const auto& zj : z) {
    zj.validate();
    low_sum += zj.low;
    high_sum += zj.high;
  }
  if (!(low_sum < demand && demand < high_sum)) {
    throw Infeasible("demand " + std::to_string(demand) + " outside (" +
                     std::to_string(low_sum) + ", " + std::to_string(high_sum) + ")");
  }

  Vector u(static_cast<Eigen::Index>(z.size()));
  auto total_at = [&](double nu) {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      u(static_cast<Eigen::Index>(j)) = invert_slope(z[j], nu, opt.max_inner);
      s += u(static_cast<Eigen::Index>(j));
    }
    return s;
  };
  auto total_slope = [&]() {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double uj = u(static_cast<Eigen::Index>(j));
      if (z[j].mu == 0.0 && (uj <= z[j].low || uj >= z[j].high)) continue;
      s += 1.0 / z[j].curvature(uj);
    }
    return s;
  };

  double lo = kInf, hi = -kInf;
  for (const auto& zj : z) {
    const double s = zj.slope(representative_point(zj));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  double width = std::max(1.0, hi - lo);
  int guard = 0;
  while (total_at(lo) > demand) {
    lo -= width;
    width *= 2.0;
    if (++guard > 2000) throw NoConvergence("cannot bracket the marginal from below");
  }
  width = std::max(1.0, hi - lo);
  while (total_at(hi) < demand) {
    hi += width;
    width *= 2.0;
    if (++guard > 4000) throw NoConvergence("cannot bracket the marginal from above");
  }

  double nu = 0.5 * (lo + hi);
  double residual = total_at(nu) - demand;
  for (int it = 0; it < opt.max_outer && std::abs(residual) > opt.balance_tol; ++it) {
    if (residual > 0.0) hi = nu; else lo = nu;
    if (std::nextafter(lo, hi) >= hi) break;
    const double slope = total_slope();
    double next = slope > 0.0 ? nu - residual / slope : 0.5 * (lo + hi);
    // Every fifth step bisects so a stalled Newton sequence still shrinks the bracket.
    if (!(next > lo && next < hi) || it % 5 == 4) next = 0.5 * (lo + hi);
    nu = next;
    residual = total_at(nu) - demand;
  }
  if (std::abs(residual) > opt.balance_tol) {
    throw NoConvergence("balance residual " + std::to_string(std::abs(residual)));
  }
  // A few more Newton steps, kept only while they help.
  for (int it = 0; it < 4 && residual != 0.0; ++it) {
    const Vector keep = u;
    const double slope = total_slope();
    if (!(slope > 0.0)) break;
    const double next = nu - residual / slope;
    const double r = total_at(next) - demand;
    if (!(std::abs(r) < std::abs(residual))) {
      u = keep;
      break;
    }
    nu = next;
    residual = r;
  }

  SetpointSolution sol;
  sol.u = u;
  sol.nu = nu;
  sol.balance_residual = std::abs(residual);
  for (std::size_t j = 0; j < z.size(); ++j) {
    sol.stationarity_residual = std::max(
        sol.stationarity_residual, std::abs(z[j].slope(u(static_cast<Eigen::Index>(j))) - nu));
  }
  return sol;
}

OptimalityCertificate verify_optimality(const Topology& t, const Vector& d_diag,
                                        const SetpointSolution& sol,
                                        const EquilibriumParams& p,
                                        std::span<const Disutility> z) {
  const auto m = static_cast<Eigen::Index>(t.size());
  if (d_diag.size() != m || sol.u.size() != m || static_cast<Eigen::Index>(z.size()) != m) {
    throw DimensionMismatch("verify_optimality: sizes disagree");
  }
  if ((d_diag.array() < 0.0).any()) throw InvalidArgument("D must be non-negative");
  const SpectralSummary spec = spectral_summary(t);
  if (!spec.left_null_vector) {
    throw ConditionViolated("Laplacian has no simple zero eigenvalue");
  }
  const double weight = spec.left_null_vector->dot(d_diag);
  if (!(weight > 0.0)) throw ConditionViolated("x_L^T D 1 = " + std::to_string(weight));

  OptimalityCertificate c;
  c.q_h = Vector::Constant(m, sol.nu);
  const Vector dy = equilibrium_map(sol.u, p);
  c.balance_residual = (d_diag.cwiseProduct(dy) + laplacian(t) * c.q_h).cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double target = conjugate_gradient_map(z[static_cast<std::size_t>(j)], c.q_h(j));
    c.conjugate_residual = std::max(c.conjugate_residual, std::abs(sol.u(j) - target));
  }
  c.passed = c.balance_residual <= kCertificateTol && c.conjugate_residual <= kCertificateTol;
  return c;
}

}  // namespace icschaos
