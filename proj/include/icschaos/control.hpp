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

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "icschaos/plant.hpp"
#include "icschaos/topology.hpp"

namespace icschaos {

// ---------------------------------------------------------------------------
// Distributed averaging PI layer.
// ---------------------------------------------------------------------------

struct AgentState {
  NodeId node;
  double u = 0.0;     // integrator / control input
  double beta = 0.0;  // bias, input units per minute
  double C = 0.0;     // local measurement coefficient, >= 0
};

/// One agent per topology node with C_j equal to the row sum of A, so that
/// Q = C - A is the Laplacian.
std::vector<AgentState> make_agents(const Topology& t, std::span<const double> u0);

/// Q = diag(C) - A.
Eigen::MatrixXd interaction_matrix(const Topology& t, std::span<const AgentState> agents);

/// u' = -Q x + beta. Throws DimensionMismatch when sizes disagree.
Vector dapi_derivative(const Topology& t, std::span<const AgentState> agents, const Vector& x);

/// Single-agent rate with separate local and remote views:
/// -C_j * local + sum_l a_jl * remote_l + beta_j.
double dapi_rate(const AgentState& agent, double local, std::span<const double> weights,
                 std::span<const double> remote);

/// Linearized closed loop of x' = A_p x + B_p u, u' = -Q (H x) + beta with
/// state ordering (x, u).
Eigen::MatrixXd assemble_linear_dapi(const Topology& t, std::span<const AgentState> agents,
                                     const Eigen::MatrixXd& plant_a,
                                     const Eigen::MatrixXd& plant_b,
                                     const Eigen::MatrixXd& output_h);

/// Restriction of A to the invariant subspace {z : w^T z = 0}, valid when
/// w^T A = 0 (a conserved quantity). Returns P^T A P for an orthonormal basis P.
Eigen::MatrixXd restrict_to_invariant(const Eigen::MatrixXd& a, const Eigen::VectorXd& w);

// ---------------------------------------------------------------------------
// Setpoint optimization.
// ---------------------------------------------------------------------------

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// z(u) = (u - r)^2 / (2 alpha) - mu [log(u - low) + log(high - u)].
/// Infinite bounds drop their barrier term.
struct Disutility {
  double reference = 0.0;
  double alpha = 1.0;
  double low = -kInf;
  double high = kInf;
  double mu = 0.0;

  void validate() const;
  double value(double u) const;
  double slope(double u) const;      // z'(u)
  double curvature(double u) const;  // z''(u)
};

struct SetpointSolution {
  Vector u;
  double nu = 0.0;
  double balance_residual = 0.0;
  double stationarity_residual = 0.0;
};

struct SolverOptions {
  double balance_tol = 1e-10;
  int max_outer = 400;
  int max_inner = 200;
};

/// argmin sum z_j(u_j) subject to sum u_j = demand, by a safeguarded
/// Newton/bisection search on the common marginal nu. Throws Infeasible when
/// demand is not strictly inside (sum low, sum high), NoConvergence otherwise.
SetpointSolution solve_setpoints(std::span<const Disutility> z, double demand,
                                 const SolverOptions& opt = {});

/// (z')^{-1}(q): the maximizer of q u - z(u).
double conjugate_gradient_map(const Disutility& z, double q, int max_iter = 200);

struct OptimalityCertificate {
  Vector q_h;
  double balance_residual = 0.0;  // ||D dy(u_h) + L q_h||_inf
  double conjugate_residual = 0.0;  // ||u_h - grad z*(q_h)||_inf
  bool passed = false;
};

inline constexpr double kCertificateTol = 1e-8;

/// Checks the distributed optimality conditions at `sol`. Throws
/// ConditionViolated when the graph has no simple zero eigenvalue or
/// x_L^T D 1 <= 0.
OptimalityCertificate verify_optimality(const Topology& t, const Vector& d_diag,
                                        const SetpointSolution& sol,
                                        const EquilibriumParams& p,
                                        std::span<const Disutility> z);

}  // namespace icschaos
