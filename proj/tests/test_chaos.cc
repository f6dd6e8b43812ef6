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
#include <map>
#include <set>
#include <tuple>

#include "icschaos/chaos.hpp"
#include "icschaos/config.hpp"
#include "icschaos/errors.hpp"
#include "icschaos/tec_surrogate.hpp"

using namespace icschaos;

namespace {

LoopSetup tec_setup(const std::string& scenario = "nominal") {
  return build_spec(demo_tec_config(scenario)).setup;
}

LoopSetup k2_setup() {
  Topology t(2, {{NodeId{1}, NodeId{2}, 1.0}, {NodeId{2}, NodeId{1}, 1.0}});
  LoopSetup s;
  s.topology = t;
  s.plant = make_linear_test_plant(2);
  s.x0 = Vector::Zero(2);
  s.x0 << 1.0, -1.0;
  s.nominal_input = Vector::Zero(2);
  s.disturbance = DisturbanceSignal(0);
  std::vector<double> u0{0.0, 0.0};
  s.agents = make_agents(t, u0);
  s.wiring = {{"a1", 0, 0, {}, {}}, {"a2", 1, 1, {}, {}}};
  return s;
}

struct NetSnapshot {
  std::vector<std::tuple<double, double, double, bool>> links;
  std::vector<std::pair<bool, double>> nodes;
  friend bool operator==(const NetSnapshot&, const NetSnapshot&) = default;
};

NetSnapshot snapshot(const net::Network& n) {
  NetSnapshot s;
  for (std::size_t i = 0; i < n.links().size(); ++i) {
    auto p = n.effective(i);
    s.links.emplace_back(p.base_latency, p.jitter, p.drop_prob, p.up);
  }
  for (std::size_t i = 0; i < n.node_count(); ++i)
    s.nodes.emplace_back(n.alive(NodeId::from_slot(i)), n.slowdown(NodeId::from_slot(i)));
  return s;
}

bool is_period(const std::vector<int>& bits, std::size_t p) {
  for (std::size_t i = 0; i + p < bits.size(); ++i)
    if (bits[i] != bits[i + p]) return false;
  return true;
}

std::vector<std::size_t> prime_factors(std::size_t n) {
  std::vector<std::size_t> f;
  for (std::size_t q = 2; q * q <= n; ++q)
    if (n % q == 0) {
      f.push_back(q);
      while (n % q == 0) n /= q;
    }
  if (n > 1) f.push_back(n);
  return f;
}

}  // namespace

TEST_CASE("three-level schedule with the component A feed") {
  const PerturbationSequence p{0.25, 0.05, 600.0, 1440.0};
  CHECK(eval_perturbation(p, 300.0) == 0.25);
  CHECK(eval_perturbation(p, 1200.0) == 0.30);
  CHECK(eval_perturbation(p, 2400.0) == 0.20);
  CHECK(eval_perturbation(p, 3600.0) == 0.25);
  CHECK(eval_perturbation(p, 600.0) == 0.30);
  CHECK(eval_perturbation(p, 2040.0) == 0.20);
  CHECK(eval_perturbation(p, 3480.0) == 0.25);
  CHECK(PerturbationSequence{}.window == 1440.0);

  // The two windows cancel: piecewise integral and pairwise Riemann sum.
  const double hi = eval_perturbation(p, p.t0) - p.u0;
  const double lo = eval_perturbation(p, p.t0 + p.window) - p.u0;
  CHECK(hi * p.window + lo * p.window == 0.0);
  double pairs = 0.0;
  for (int k = 0; k < 1440; ++k)
    pairs += (eval_perturbation(p, p.t0 + k) - p.u0) + (eval_perturbation(p, p.t0 + p.window + k) - p.u0);
  CHECK(pairs == 0.0);
}

TEST_CASE("prbs with a three-bit register has period seven") {
  PrbsGenerator g(3, 1, 1.0);
  std::vector<std::uint32_t> states{g.state()};
  for (int i = 0; i < 7; ++i) {
    g.next_bit();
    states.push_back(g.state());
  }
  CHECK(states[7] == states[0]);
  std::set<std::uint32_t> seen(states.begin(), states.begin() + 7);
  CHECK(seen.size() == 7);
  CHECK_FALSE(seen.count(0));
}

TEST_CASE("prbs bit streams have maximal period for every built-in register") {
  for (unsigned k = 2; k <= 20; ++k) {
    PrbsGenerator g(k, 1, 1.0);
    const std::size_t period = (std::size_t(1) << k) - 1;
    std::vector<int> bits;
    for (std::size_t i = 0; i < 2 * period + k; ++i) bits.push_back(g.next_bit());
    CAPTURE(k);
    CHECK(is_period(bits, period));
    for (std::size_t q : prime_factors(period)) CHECK_FALSE(is_period(bits, period / q));
  }
}

TEST_CASE("prbs levels are balanced and deterministic") {
  for (unsigned k : {3u, 5u, 10u, 16u}) {
    PrbsGenerator g(k, 1, 0.5), h(k, 1, 0.5);
    const std::size_t period = (std::size_t(1) << k) - 1;
    long plus = 0, minus = 0;
    for (std::size_t i = 0; i < period; ++i) {
      const double v = g.next();
      CHECK(v == h.next());
      CHECK((v == 0.5 || v == -0.5 || v == 0.0));
      plus += v > 0;
      minus += v < 0;
    }
    CAPTURE(k);
    CHECK(std::abs(plus - minus) <= 1);
  }
  CHECK_THROWS_AS(PrbsGenerator(3, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(PrbsGenerator(3, 8, 1.0), InvalidArgument);
  CHECK_THROWS_AS(PrbsGenerator::maximal_taps(1), InvalidArgument);
}

TEST_CASE("schedule order is stable by start time") {
  EventSchedule s({{5.0, SubnetUnavailable{1.0}}, {1.0, SubnetUnavailable{2.0}}, {5.0, TerminateNode{"x", 1.0}}});
  REQUIRE(s.entries().size() == 3);
  CHECK(s.source_index() == std::vector<std::size_t>{1, 0, 2});
  CHECK(std::string(event_type(s.entries()[2].event)) == "terminate_node");
  CHECK_THROWS_AS(EventSchedule({{-1.0, SubnetUnavailable{1.0}}}), InvalidArgument);
  CHECK_THROWS_AS(EventSchedule({{0.0, SubnetUnavailable{0.0}}}), InvalidArgument);
  CHECK_THROWS_AS(validate_event(InjectNetworkError{{{"a", "b"}}, 1.5, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate_event(OverloadNode{"a", 0.5, 1.0}), InvalidArgument);
}

TEST_CASE("apply then revert restores network parameters exactly") {
  ClosedLoop loop(tec_setup());
  const NetSnapshot before = snapshot(*loop.network());
  const std::vector<ChaosEvent> events{
      TerminateNode{"HIST", 3.0},
      OverloadNode{"CTRL_A", 2.5, 3.0},
      InjectLatency{{{"TT1", "R1"}, {"R1", "CTRL_A"}}, 0.37, 3.0},
      InjectNetworkError{{{"R1", "CTRL_C"}}, 0.3, 3.0},
      SubnetUnavailable{3.0},
      RestartPlc{"CTRL_C", 3.0, false},
      FailSensor{"TT1", SensorFailure::Silence, 0.0, 3.0},
  };
  std::vector<AppliedEvent> applied;
  for (const auto& e : events) applied.push_back(apply_event(loop, e));
  CHECK_FALSE(snapshot(*loop.network()) == before);
  CHECK(loop.network()->effective(0).base_latency == 0.01 + 0.37);
  for (std::size_t i = events.size(); i-- > 0;) revert_event(loop, events[i], applied[i]);
  CHECK(snapshot(*loop.network()) == before);

  // Same again in a different interleaving.
  auto a = apply_event(loop, events[2]);
  auto b = apply_event(loop, events[3]);
  revert_event(loop, events[2], a);
  auto c = apply_event(loop, events[2]);
  revert_event(loop, events[3], b);
  revert_event(loop, events[2], c);
  CHECK(snapshot(*loop.network()) == before);

  CHECK_THROWS_AS(apply_event(loop, TerminateNode{"nope", 1.0}), UnknownTarget);
  CHECK_THROWS_AS(apply_event(loop, InjectLatency{{{"TT1", "HMI"}}, 1.0, 1.0}), UnknownTarget);
  CHECK_THROWS_AS(apply_event(loop, FailSensor{"HMI", SensorFailure::Bias, 1.0, 1.0}), UnknownTarget);
  CHECK_THROWS_AS(apply_event(loop, InputStep{"feed_Z", 1.0, 1.0}), UnknownTarget);
}

TEST_CASE("router outage stops every cross-LAN delivery in its window") {
  ClosedLoop loop(tec_setup());
  ChaosDriver driver(EventSchedule({{10.0, SubnetUnavailable{20.0}}}), 0.0);
  std::size_t cross_in_window = 0, cross_outside = 0;
  while (loop.time() < 40.0 - 1e-9) {
    driver.before_step(loop);
    loop.advance();
  }
  for (const auto& m : loop.network()->log()) {
    if (m.fate != net::Fate::Delivered || !loop.network()->crosses_lan(m.src, m.dst)) continue;
    if (m.deliver_time >= 10.0 && m.deliver_time < 30.0) ++cross_in_window;
    else ++cross_outside;
  }
  CHECK(cross_in_window == 0);
  CHECK(cross_outside > 0);
  REQUIRE(driver.log().size() == 2);
  CHECK(driver.log()[0].action == "apply");
  CHECK(driver.log()[0].t == doctest::Approx(10.0));
  CHECK(driver.log()[1].action == "revert");
  CHECK(driver.log()[1].t == doctest::Approx(30.0));
}

TEST_CASE("biased sensor shifts what the controller sees") {
  ClosedLoop loop(tec_setup("disturbance"));
  loop.set_disturbance(loop.disturbance().shifted(5.0));
  ChaosDriver driver(EventSchedule({{10.0, FailSensor{"TT1", SensorFailure::Bias, 5.0, 30.0}}}), 0.0);
  std::map<double, double> truth;
  net::Network& n = *loop.network();
  const NodeId ctrl = n.id_of("CTRL_A"), tt = n.id_of("TT1");
  int checked = 0;
  while (loop.time() < 60.0 - 1e-9) {
    truth[loop.time()] = loop.state().x(tec::kTemperature) - 120.0;
    driver.before_step(loop);
    loop.advance();
    if (auto h = n.last_known(ctrl, tt)) {
      const double expect = truth.at(h->sample_time) + (h->sample_time >= 10.0 - 1e-9 && h->sample_time < 40.0 - 1e-9 ? 5.0 : 0.0);
      CHECK(h->value == expect);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("plc restart freezes then resets the integrator") {
  for (bool checkpoint : {false, true}) {
    ClosedLoop loop(k2_setup());
    ChaosDriver driver(EventSchedule({{5.0, RestartPlc{"a1", 2.0, checkpoint}}}), 0.0);
    double frozen = 0.0;
    while (loop.time() < 7.0 - 1e-9) {
      driver.before_step(loop);
      if (std::abs(loop.time() - 5.0) < 1e-9) frozen = loop.agents()[0].u;
      loop.advance();
    }
    CHECK(frozen != 0.0);
    CHECK(loop.agents()[0].u == frozen);
    CHECK(loop.agents()[1].u != 0.0);
    driver.before_step(loop);
    CHECK(loop.agents()[0].u == (checkpoint ? frozen : loop.initial_u(0)));
    CHECK(loop.agent_running(0));
  }
}

TEST_CASE("input events drive offsets") {
  ClosedLoop loop(k2_setup());
  ChaosDriver driver(EventSchedule({{2.0, InputStep{"u1", 0.5, 3.0}}, {1.0, InputPrbs{"u2", 0.2, 5, 1, 1.0, 4.0}}}), 0.0);
  PrbsGenerator ref(5, 1, 0.2);
  std::vector<double> prbs_levels;
  for (int k = 0; k < 4; ++k) prbs_levels.push_back(ref.next());
  while (loop.time() < 12.0 - 1e-9) {
    driver.before_step(loop);
    const double t = loop.time();
    CHECK(loop.input_offset(0) == (t < 2.0 - 1e-9 || t >= 8.0 - 1e-9 ? 0.0 : eval_perturbation({0.0, 0.5, 0.0, 3.0}, t - 2.0)));
    if (t >= 1.0 - 1e-9 && t < 5.0 - 1e-9) {
      CHECK(loop.input_offset(1) == prbs_levels[std::size_t(std::floor(t - 1.0 + 1e-9))]);
    } else {
      CHECK(loop.input_offset(1) == 0.0);
    }
    loop.advance();
  }
}

TEST_CASE("abort guard") {
  AbortGuard g{tec::table_limits(), true};
  std::vector<std::pair<std::string, double>> hot{{"reactor_temperature_C", 176.0}};
  auto r = guard_check(hot, 12.0, g);
  REQUIRE(std::holds_alternative<GuardAbort>(r));
  const auto& a = std::get<GuardAbort>(r);
  CHECK(a.variable == "reactor_temperature_C");
  CHECK(a.value == 176.0);
  CHECK(a.limit == 175.0);
  CHECK(a.time == 12.0);

  std::vector<std::pair<std::string, double>> warm{{"reactor_temperature_C", 160.0}};
  auto w = guard_check(warm, 0.0, g);
  REQUIRE(std::holds_alternative<GuardContinue>(w));
  CHECK(std::get<GuardContinue>(w).normal_exceeded == std::vector<std::string>{"reactor_temperature_C"});

  PlantModel p = tec::make_plant();
  Vector x = p.equilibrium(tec::Params{}.nominal_inputs(), Vector::Zero(1));
  auto mid = guard_check(p, PlantState{0.0, x}, g);
  REQUIRE(std::holds_alternative<GuardContinue>(mid));
  CHECK(std::get<GuardContinue>(mid).normal_exceeded.empty());

  std::vector<std::pair<std::string, double>> low{{"reactor_level_m3", 1.0}};
  auto l = guard_check(low, 0.0, g);
  REQUIRE(std::holds_alternative<GuardAbort>(l));
  CHECK(std::get<GuardAbort>(l).limit == 2.0);

  g.enabled = false;
  CHECK(std::holds_alternative<GuardContinue>(guard_check(hot, 0.0, g)));
}
