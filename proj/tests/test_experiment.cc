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
#include <limits>

#include "icschaos/config.hpp"
#include "icschaos/errors.hpp"
#include "icschaos/experiment.hpp"
#include "icschaos/report.hpp"
#include "icschaos/tec_surrogate.hpp"
#include "oracles.hpp"

using namespace icschaos;

namespace {

std::vector<double> minutes(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = double(i);
  return t;
}

// Earliest steady window by brute force: plain mean over the trailing
// window, every sample of the hold span within the band.
std::optional<SteadyWindow> steady_oracle(const std::vector<double>& t, const std::vector<double>& v,
                                          double window, double band, double hold) {
  for (std::size_t b = 0; b < t.size(); ++b) {
    std::optional<std::size_t> a;
    for (std::size_t i = 0; i <= b; ++i)
      if (t[i] <= t[b] - hold + 1e-9) a = i;
    if (!a) continue;
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i <= b; ++i)
      if (t[i] >= t[b] - window - 1e-9) {
        sum += v[i];
        ++n;
      }
    const double mean = sum / n;
    bool ok = true;
    for (std::size_t i = *a; i <= b; ++i) ok = ok && std::abs(v[i] - mean) <= band;
    if (ok) return SteadyWindow{t[*a], t[b], mean};
  }
  return std::nullopt;
}

ExperimentSpec demo(const std::string& scenario) { return build_spec(demo_tec_config(scenario)); }

std::string record(const ExperimentResult& r) { return result_record(r, "x", "h").dump(); }

// One integrator on x' = -x + u + d x 1e300; the disturbance blows the state
// up right after injection.
ExperimentSpec diverging_spec() {
  ExperimentSpec s;
  s.setup.topology = Topology(1, {});
  PlantModel p = make_linear_test_plant(1);
  p.disturbance_dim = 1;
  p.drift = [](const Vector& x, const Vector& u, const Vector& d) -> Vector {
    return u - x + d(0) * 1e300 * x;
  };
  s.setup.plant = p;
  s.setup.x0 = Vector::Ones(1);
  s.setup.nominal_input = Vector::Zero(1);
  s.setup.disturbance = DisturbanceSignal(1, {{0.0, Vector::Ones(1)}});
  std::vector<double> u0{1.0};
  s.setup.agents = make_agents(s.setup.topology, u0);
  s.setup.wiring = {{"a1", 0, 0, {}, {}}};
  s.steady = {"x1", 5.0, 0.01, 5.0};
  s.hypothesis = {"x1", 0.0, 2.0, 10.0};
  s.duration = 10.0;
  s.settle_limit = 50.0;
  return s;
}

}  // namespace

TEST_CASE("steady state detection examples") {
  const auto t = minutes(61);
  std::vector<double> flat(61, 100.0);
  auto w = detect_steady_state(t, flat, {"m", 10.0, 1.0, 10.0});
  REQUIRE(w);
  CHECK(w->t_a == 0.0);
  CHECK(w->t_b == 10.0);
  CHECK(w->baseline == 100.0);

  std::vector<double> ramp(61);
  for (std::size_t i = 0; i < 61; ++i) ramp[i] = double(i);
  CHECK_FALSE(detect_steady_state(t, ramp, {"m", 10.0, 0.1, 10.0}));

  oracle::SplitMix64 g(42);
  std::vector<double> noisy(200);
  for (auto& v : noisy) v = 50.0 + (g.uniform() * 0.8 - 0.4);
  const auto tn = minutes(200);
  auto found = detect_steady_state(tn, noisy, {"m", 30.0, 1.0, 30.0});
  auto expect = steady_oracle(tn, noisy, 30.0, 1.0, 30.0);
  REQUIRE(found);
  REQUIRE(expect);
  CHECK(found->t_a == expect->t_a);
  CHECK(found->t_b == expect->t_b);
  CHECK(std::abs(found->baseline - expect->baseline) <= 1e-12);
  CHECK(std::abs(found->baseline - 50.0) <= 0.4);

  // Noise wider than the band is never steady, by either route.
  std::vector<double> wild(200);
  for (auto& v : wild) v = 50.0 + (g.uniform() * 8.0 - 4.0);
  CHECK(detect_steady_state(tn, wild, {"m", 30.0, 1.0, 30.0}).has_value() ==
        steady_oracle(tn, wild, 30.0, 1.0, 30.0).has_value());

  CHECK_THROWS_AS((SteadyStateSpec{"m", 10.0, 1.0, 5.0}.validate()), InvalidArgument);
}

TEST_CASE("steady detection agrees with brute force on random series") {
  oracle::SplitMix64 g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + std::size_t(g.next() % 80);
    std::vector<double> v(n);
    double level = 10.0 * g.uniform();
    for (auto& x : v) {
      if (g.uniform() < 0.05) level += 3.0 * (g.uniform() - 0.5);
      x = level + 0.3 * (g.uniform() - 0.5);
    }
    const double window = 3.0 + double(g.next() % 8);
    const double hold = window + double(g.next() % 5);
    const auto t = minutes(n);
    auto a = detect_steady_state(t, v, {"m", window, 0.2, hold});
    auto b = steady_oracle(t, v, window, 0.2, hold);
    CAPTURE(trial);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(a->t_b == b->t_b);
      CHECK(std::abs(a->baseline - b->baseline) <= 1e-9);
    }
  }
}

TEST_CASE("blast radius examples") {
  std::map<std::string, Limits> lm;
  for (const char* n : {"v1", "v2", "v3", "v4", "v5"}) lm[n] = Limits{0.0, 10.0, -5.0, 15.0};
  ProcessLimits limits(lm);
  Trajectory tr;
  tr.columns = {"t", "v1", "v2", "v3", "v4", "v5"};
  for (int i = 0; i <= 100; ++i) tr.rows.push_back({double(i), 5.0, 5.0, 5.0, 5.0, 5.0});

  auto none = blast_radius(tr, limits, 0.0, 100.0);
  CHECK(none.fraction_violating == 0.0);
  CHECK(none.violation_integral == 0.0);
  CHECK(none.shutdown_events == 0);

  // v3 sits 10 % of its band width above normal_high for ten minutes.
  for (int i = 40; i < 50; ++i) tr.rows[std::size_t(i)][3] = 11.0;
  auto one = blast_radius(tr, limits, 0.0, 100.0);
  CHECK(one.fraction_violating == 0.2);
  CHECK(std::abs(one.violation_integral - 0.1 * 10.0 / (100.0 * 5.0)) <= 1e-15);
  CHECK(one.violating == std::vector<std::string>{"v3"});
  CHECK(one.shutdown_events == 0);

  tr.rows[70][1] = 15.0;
  auto shut = blast_radius(tr, limits, 0.0, 100.0);
  CHECK(shut.shutdown_events == 1);
  CHECK(shut.fraction_violating == 0.4);
}

TEST_CASE("blast radius hand integration on random excursions") {
  oracle::SplitMix64 g(3);
  ProcessLimits limits({{"a", Limits{0.0, 2.0, std::nullopt, std::nullopt}},
                        {"b", Limits{std::nullopt, 4.0, std::nullopt, 6.0}}});
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory tr;
    tr.columns = {"t", "a", "b"};
    double t = 0.0;
    for (int i = 0; i < 50; ++i) {
      tr.rows.push_back({t, -1.0 + 4.0 * g.uniform(), 2.0 + 4.0 * g.uniform()});
      t += 0.5 + g.uniform();
    }
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < tr.rows.size(); ++i) {
      const double h = tr.rows[i + 1][0] - tr.rows[i][0];
      const double a = tr.rows[i][1], b = tr.rows[i][2];
      integral += h * (std::max(0.0, a - 2.0) / 2.0 + std::max(0.0, -a) / 2.0);
      integral += h * std::max(0.0, b - 4.0) / 2.0;
    }
    auto br = blast_radius(tr, limits, 0.0, t);
    CHECK(std::abs(br.violation_integral - integral / (tr.rows.back()[0] * 2.0)) <= 1e-12);
    CHECK(br.fraction_violating >= 0.0);
    CHECK(br.fraction_violating <= 1.0);
  }
}

TEST_CASE("dire metrics examples") {
  const auto t = minutes(200);
  std::vector<double> flat(200, 0.95);
  auto d = dire_metrics(t, flat, 0.95, 0.01, 30.0, 0.0);
  CHECK(d.p_min == 0.95);
  REQUIRE(d.t_recover);
  CHECK(*d.t_recover == 0.0);
  CHECK(d.restoration_ratio == 1.0);

  // Drop of delta at t1 with exponential recovery: crossing at tau ln(delta/eps).
  const double p = 1.0, delta = 0.2, tau = 15.0, eps = 0.01, t1 = 20.0;
  std::vector<double> v(200);
  for (std::size_t i = 0; i < 200; ++i) v[i] = t[i] < t1 ? p : p - delta * std::exp(-(t[i] - t1) / tau);
  auto r = dire_metrics(t, v, p, eps, 10.0, 0.0);
  CHECK(r.p_min == doctest::Approx(p - delta));
  CHECK(r.t_dip == t1);
  REQUIRE(r.t_recover);
  CHECK(std::abs((*r.t_recover - t1) - tau * std::log(delta / eps)) <= 1.0);
  CHECK(r.p_min <= r.p_initial);

  std::vector<double> sunk(200);
  for (std::size_t i = 0; i < 200; ++i) sunk[i] = t[i] < t1 ? p : 0.7;
  auto s = dire_metrics(t, sunk, p, eps, 10.0, 0.0);
  CHECK_FALSE(s.t_recover);
  CHECK(s.restoration_ratio < 1.0);
  CHECK(s.restoration_ratio >= 0.0);
}

TEST_CASE("nominal scenario holds with no blast") {
  auto r = run_experiment(demo("nominal"));
  CHECK(r.verdict.kind == VerdictKind::Held);
  CHECK(r.blast.fraction_violating == 0.0);
  CHECK(r.blast.violation_integral == 0.0);
  CHECK(r.blast.shutdown_events == 0);
  CHECK(r.dire.restoration_ratio == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(r.steady);
  CHECK(std::abs(r.steady->baseline - 0.95) <= 1e-6);
}

TEST_CASE("router outage disproves the yield hypothesis") {
  auto r = run_experiment(demo("router-outage"));
  REQUIRE(r.verdict.kind == VerdictKind::Disproved);
  CHECK(r.verdict.time > r.t_injection);
  const auto t = r.trajectory.times();
  const auto temp = r.trajectory.series("reactor_temperature_C");
  const auto y = r.trajectory.series("output_yield");
  double t_inj = 0.0, t_max = -1e9, y_inj = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i] - r.t_injection) < 1e-9) {
      t_inj = temp[i];
      y_inj = y[i];
    }
    if (t[i] >= r.t_injection) t_max = std::max(t_max, temp[i]);
  }
  CHECK(t_max > t_inj + 1.0);
  CHECK(r.dire.p_min < y_inj);
  CHECK(r.dire.p_min < 0.90);
  CHECK(r.blast.fraction_violating > 0.0);
}

TEST_CASE("overdrive aborts before a sample runs past the shutdown limit") {
  auto spec = demo("overdrive");
  auto r = run_experiment(spec);
  REQUIRE(r.verdict.kind == VerdictKind::Aborted);
  REQUIRE(r.verdict.abort);
  CHECK(r.verdict.abort->variable == "reactor_temperature_C");
  const auto& p = spec.setup.plant;
  const std::size_t ct = r.trajectory.column("reactor_temperature_C");
  const auto& last = r.trajectory.rows.back();
  CHECK(last[0] == r.verdict.time);
  Vector x(5), u(3);
  for (int i = 0; i < 5; ++i) x(i) = last[ct + std::size_t(i)];
  for (int i = 0; i < 3; ++i) u(i) = last[r.trajectory.column(p.inputs[std::size_t(i)].name)];
  const double drift = std::abs(p.drift(x, u, Vector::Constant(1, 12.0))(tec::kTemperature)) * spec.setup.dt;
  for (const auto& row : r.trajectory.rows) CHECK(row[ct] <= 175.0 + 1.5 * drift);
  for (std::size_t i = 0; i + 1 < r.trajectory.size(); ++i) CHECK(r.trajectory.rows[i][ct] <= 175.0);
  CHECK(last[ct] > 175.0);
}

TEST_CASE("settling failures and divergence") {
  auto s = demo("nominal");
  s.settle_limit = 10.0;
  CHECK(run_experiment(s).verdict.kind == VerdictKind::NoSteadyState);

  auto r = run_experiment(diverging_spec());
  CHECK(r.verdict.kind == VerdictKind::Aborted);
  CHECK(r.verdict.reason == "integrator divergence");
}

TEST_CASE("verdicts are witnessed by the trajectory") {
  for (const auto& name : demo_scenarios()) {
    auto spec = demo(name);
    auto r = run_experiment(spec);
    const auto t = r.trajectory.times();
    const auto v = r.trajectory.series(spec.hypothesis.metric);
    bool outside = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < r.t_injection - 1e-9 || t[i] > r.t_injection + spec.hypothesis.horizon + 1e-9) continue;
      const bool out = v[i] < spec.hypothesis.lo || v[i] > spec.hypothesis.hi;
      outside = outside || out;
      if (r.verdict.kind == VerdictKind::Disproved && t[i] == r.verdict.time) CHECK(out);
    }
    CAPTURE(name);
    if (r.verdict.kind == VerdictKind::Held) CHECK_FALSE(outside);
    if (r.verdict.kind == VerdictKind::Disproved) CHECK(outside);
  }
}

TEST_CASE("repeat runs and batches are identical") {
  auto spec = demo("router-outage");
  CHECK(record(run_experiment(spec)) == record(run_experiment(spec)));

  std::vector<ExperimentSpec> specs;
  for (const auto& n : demo_scenarios()) specs.push_back(demo(n));
  specs.push_back(demo("nominal"));
  specs.back().settle_limit = -1.0;  // fails validation
  auto one = batch_run(specs, 1);
  auto four = batch_run(specs, 4);
  REQUIRE(one.size() == specs.size());
  REQUIRE(four.size() == specs.size());
  for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
    REQUIRE(one[i].result);
    REQUIRE(four[i].result);
    CHECK(record(*one[i].result) == record(*four[i].result));
  }
  CHECK_FALSE(one.back().result);
  CHECK_FALSE(four.back().result);
  CHECK(one.back().error == four.back().error);
  CHECK(one.back().error.find("settle") != std::string::npos);
}
