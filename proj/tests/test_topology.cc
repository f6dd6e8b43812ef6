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

#include <doctest.h>

#include <cmath>
#include <random>

#include "icschaos/errors.hpp"
#include "icschaos/topology.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace icschaos;
using gen::dense;
using gen::random_digraph;

namespace {

Topology unit_graph(std::size_t m, std::initializer_list<std::pair<int, int>> e) {
  std::vector<WeightedEdge> edges;
  for (auto [i, j] : e) edges.push_back({NodeId{std::size_t(i)}, NodeId{std::size_t(j)}, 1.0});
  return Topology(m, edges);
}

std::set<NodeId> ids(std::initializer_list<int> v) {
  std::set<NodeId> s;
  for (int i : v) s.insert(NodeId{std::size_t(i)});
  return s;
}

std::set<NodeId> to_ids(const std::set<std::size_t>& slots) {
  std::set<NodeId> s;
  for (auto k : slots) s.insert(NodeId::from_slot(k));
  return s;
}

}  // namespace

TEST_CASE("laplacian of small graphs") {
  Eigen::MatrixXd k2(2, 2);
  k2 << 1, -1, -1, 1;
  CHECK(laplacian(unit_graph(2, {{1, 2}, {2, 1}})) == k2);

  Eigen::MatrixXd chain(3, 3);
  chain << 1, -1, 0, 0, 1, -1, 0, 0, 0;
  CHECK(laplacian(unit_graph(3, {{1, 2}, {2, 3}})) == chain);

  CHECK(laplacian(unit_graph(3, {})) == Eigen::MatrixXd::Zero(3, 3));
}

TEST_CASE("topology rejects bad input") {
  CHECK_THROWS_AS(Topology(0, {}), InvalidArgument);
  CHECK_THROWS_AS(Topology(2, {{NodeId{1}, NodeId{1}, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(Topology(2, {{NodeId{1}, NodeId{3}, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(Topology(2, {{NodeId{1}, NodeId{2}, -1.0}}), InvalidArgument);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  CHECK_THROWS_AS(Topology::from_adjacency(a), InvalidArgument);
}

TEST_CASE("globally reachable nodes follow information flow") {
  CHECK(globally_reachable_nodes(unit_graph(3, {{1, 2}, {2, 3}})) == ids({3}));
  CHECK(globally_reachable_nodes(unit_graph(3, {{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}})) ==
        ids({1, 2, 3}));
  CHECK(globally_reachable_nodes(unit_graph(2, {})).empty());
}

TEST_CASE("spectral summary examples") {
  SUBCASE("chain") {
    auto s = spectral_summary(unit_graph(3, {{1, 2}, {2, 3}}));
    CHECK(s.zero_multiplicity == 1);
    std::vector<double> re;
    for (auto z : s.eigenvalues) re.push_back(z.real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(re[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(re[2] == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(s.left_null_vector);
    CHECK(std::abs((*s.left_null_vector)(0)) < 1e-12);
    CHECK(std::abs((*s.left_null_vector)(1)) < 1e-12);
    CHECK(std::abs((*s.left_null_vector)(2) - 1.0) < 1e-12);
  }
  SUBCASE("isolated pair") {
    auto s = spectral_summary(unit_graph(2, {}));
    CHECK(s.zero_multiplicity == 2);
    CHECK_FALSE(s.left_null_vector);
  }
  SUBCASE("K3") {
    auto t = unit_graph(3, {{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}});
    auto s = spectral_summary(t);
    // Characteristic polynomial lambda^3 - 6 lambda^2 + 9 lambda.
    auto c = oracle::char_poly(oracle::int_laplacian({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
    CHECK(c == std::vector<long long>{1, -6, 9, 0});
    std::vector<double> re;
    for (auto z : s.eigenvalues) {
      re.push_back(z.real());
      CHECK(std::abs(z.imag()) < 1e-9);
    }
    std::sort(re.begin(), re.end());
    CHECK(std::abs(re[0]) < 1e-12);
    CHECK(std::abs(re[1] - 3.0) < 1e-12);
    CHECK(std::abs(re[2] - 3.0) < 1e-12);
    REQUIRE(s.left_null_vector);
    for (int j = 0; j < 3; ++j) CHECK(std::abs((*s.left_null_vector)(j) - 1.0 / 3.0) < 1e-12);
  }
}

TEST_CASE("reachability report examples") {
  auto chain = check_reachability(unit_graph(3, {{1, 2}, {2, 3}}));
  CHECK(chain.agree);
  CHECK(chain.simple_zero);
  CHECK(chain.reachable == ids({3}));
  REQUIRE(chain.support);
  CHECK(*chain.support == ids({3}));

  auto iso = check_reachability(unit_graph(2, {}));
  CHECK(iso.agree);
  CHECK_FALSE(iso.simple_zero);
  CHECK(iso.reachable.empty());
}

TEST_CASE("all unit digraphs on four nodes agree with exact oracles") {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) pairs.push_back({i, j});
  int disagreements = 0;
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    std::vector<std::vector<int>> a(4, std::vector<int>(4, 0));
    std::vector<WeightedEdge> edges;
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      if (mask & (1u << b)) {
        a[pairs[b].first][pairs[b].second] = 1;
        edges.push_back({NodeId::from_slot(pairs[b].first), NodeId::from_slot(pairs[b].second), 1.0});
      }
    }
    Topology t(4, edges);
    oracle::Matrix ad(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) ad[i][j] = a[i][j];
    const auto expect_reach = to_ids(oracle::globally_reachable(ad));
    const std::size_t mult = oracle::zero_root_multiplicity(oracle::char_poly(oracle::int_laplacian(a)));

    auto r = check_reachability(t);
    bool ok = r.agree && r.reachable == expect_reach && r.simple_zero == (mult == 1) &&
              (mult == 1) == !expect_reach.empty();
    if (r.simple_zero) ok = ok && r.support && *r.support == expect_reach && r.min_entry_ok;
    if (!ok) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("laplacian invariants on random digraphs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    const double p = 0.05 + 0.5 * double(rng() % 1000) / 1000.0;
    Topology t = random_digraph(rng, m, p);
    Eigen::MatrixXd L = laplacian(t);
    CAPTURE(trial);
    CHECK((laplacian_row_sums(L).array() == 0.0).all());
    CHECK((L * Eigen::VectorXd::Ones(Eigen::Index(m))).cwiseAbs().maxCoeff() <= 1e-12);

    auto s = spectral_summary(t);
    CHECK(s.zero_multiplicity >= 1);
    for (auto z : s.eigenvalues) CHECK(z.real() >= -1e-9);

    CHECK(check_reachability(t).reachable == to_ids(oracle::globally_reachable(dense(t))));
    if (s.left_null_vector) {
      CHECK(std::abs(s.left_null_vector->sum() - 1.0) < 1e-9);
      CHECK((s.left_null_vector->transpose() * L).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

// Four decades of weight spread can push true left-vector entries and true
// eigenvalues under the thresholds, so agreement is checked on one decade.
TEST_CASE("reachability routes agree on random digraphs") {
  std::mt19937_64 rng(17);
  int disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    const double p = 0.05 + 0.5 * double(rng() % 1000) / 1000.0;
    Topology t = random_digraph(rng, m, p, 0.5);
    auto r = check_reachability(t);
    CAPTURE(trial);
    CAPTURE(r.detail);
    CHECK(r.reachable == to_ids(oracle::globally_reachable(dense(t))));
    if (!r.agree) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("undirected graphs have real spectra") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 10;
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 1; i <= m; ++i)
      for (std::size_t j = i + 1; j <= m; ++j)
        if (u(rng) < 0.4) {
          const double w = 0.1 + u(rng);
          edges.push_back({NodeId{i}, NodeId{j}, w});
          edges.push_back({NodeId{j}, NodeId{i}, w});
        }
    Topology t(m, edges);
    CHECK(t.is_symmetric());
    for (auto z : spectral_summary(t).eigenvalues) CHECK(std::abs(z.imag()) <= 1e-9);
  }
}
