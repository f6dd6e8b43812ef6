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


// Seeded random instance families shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "icschaos/closed_loop.hpp"
#include "icschaos/control.hpp"
#include "icschaos/topology.hpp"
#include "oracles.hpp"

namespace gen {

using namespace icschaos;

// Each ordered pair present with probability p; weights are 10^e with e
// uniform in [-decades, decades].
inline Topology random_digraph(std::mt19937_64& rng, std::size_t m, double p, double decades = 2.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      if (i != j && u(rng) < p)
        edges.push_back({NodeId{i}, NodeId{j}, std::pow(10.0, decades * (2.0 * u(rng) - 1.0))});
  return Topology(m, edges);
}

inline oracle::Matrix dense(const Topology& t) {
  const auto& a = t.adjacency();
  oracle::Matrix out(t.size(), std::vector<double>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) out[i][j] = a(Eigen::Index(i), Eigen::Index(j));
  return out;
}

struct Instance {
  std::vector<Disutility> z;
  double demand = 0.0;
};

// Quarter of the draws are unboxed quadratics. Boxed draws use barrier
// weight 10^[mu_lo, mu_lo + mu_span] and put the demand at a fraction
// [edge, 1 - edge] of the feasible range.
inline Instance random_instance(std::mt19937_64& rng, double mu_lo = -5.0, double mu_span = 3.0,
                                double edge = 0.1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  const std::size_t m = 1 + rng() % 20;
  const bool boxed = rng() % 4 != 0;
  double lo = 0.0, hi = 0.0, ref = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    Disutility z;
    z.reference = -5.0 + 10.0 * u(rng);
    z.alpha = std::pow(10.0, -1.0 + 2.0 * u(rng));
    if (boxed) {
      z.low = z.reference - 0.5 - 4.5 * u(rng);
      z.high = z.reference + 0.5 + 4.5 * u(rng);
      z.mu = std::pow(10.0, mu_lo + mu_span * u(rng));
      lo += z.low;
      hi += z.high;
    }
    ref += z.reference;
    in.z.push_back(z);
  }
  in.demand = boxed ? lo + (edge + (1.0 - 2.0 * edge) * u(rng)) * (hi - lo) : ref - 20.0 + 40.0 * u(rng);
  return in;
}

// Random spanning tree plus m extra undirected edges, unit weights.
inline Topology random_connected_undirected(std::mt19937_64& rng, std::size_t m) {
  std::vector<WeightedEdge> e;
  std::vector<std::vector<bool>> has(m + 1, std::vector<bool>(m + 1, false));
  auto add = [&](std::size_t a, std::size_t b) {
    if (a == b || has[a][b]) return;
    has[a][b] = has[b][a] = true;
    e.push_back({NodeId{a}, NodeId{b}, 1.0});
    e.push_back({NodeId{b}, NodeId{a}, 1.0});
  };
  for (std::size_t i = 2; i <= m; ++i) add(i, 1 + rng() % (i - 1));
  for (std::size_t k = 0; k < m; ++k) add(1 + rng() % m, 1 + rng() % m);
  return Topology(m, e);
}

// Linear test plant with one agent per node, no network.
inline LoopSetup linear_loop(const Topology& t, const std::vector<double>& x0,
                             const std::vector<double>& u0) {
  const std::size_t m = t.size();
  LoopSetup s;
  s.topology = t;
  s.plant = make_linear_test_plant(m);
  s.x0 = Eigen::Map<const Vector>(x0.data(), Eigen::Index(m));
  s.nominal_input = Vector::Zero(Eigen::Index(m));
  s.disturbance = DisturbanceSignal(0);
  s.agents = make_agents(t, u0);
  for (std::size_t j = 0; j < m; ++j) s.wiring.push_back({"a" + std::to_string(j + 1), j, j, {}, {}});
  s.dt = 0.05;
  s.sample_period = 1.0;
  return s;
}

}  // namespace gen
