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

#include "icschaos/chaos.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "icschaos/errors.hpp"

namespace icschaos {

double eval_perturbation(const PerturbationSequence& p, double t) {
  if (t < p.t0) return p.u0;
  if (t < p.t0 + p.window) return p.u0 + p.delta;
  if (t < p.t0 + 2.0 * p.window) return p.u0 - p.delta;
  return p.u0;
}

namespace {

std::uint32_t mask_of(unsigned k) {
  return k >= 32 ? 0xFFFFFFFFu : (1u << k) - 1u;
}

}  // namespace

std::uint32_t PrbsGenerator::maximal_taps(unsigned k) {
  // Positions are 1-based, counted from the freshest bit.
  static const std::vector<std::vector<unsigned>> table = {
      {},           {},           {2, 1},       {3, 2},        {4, 3},       {5, 3},
      {6, 5},       {7, 6},       {8, 6, 5, 4}, {9, 5},        {10, 7},      {11, 9},
      {12, 6, 4, 1}, {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14},      {16, 15, 13, 4},
      {17, 14},     {18, 11},     {19, 6, 2, 1}, {20, 17},      {21, 19},     {22, 21},
      {23, 18},     {24, 23, 22, 17}};
  if (k < 2 || k >= table.size()) {
    throw InvalidArgument("no built-in PRBS taps for register length " + std::to_string(k));
  }
  std::uint32_t m = 0;
  for (unsigned p : table[k]) m |= 1u << (p - 1);
  return m;
}

PrbsGenerator::PrbsGenerator(unsigned k, std::uint32_t state, double delta)
    : PrbsGenerator(k, maximal_taps(k), state, delta) {}

PrbsGenerator::PrbsGenerator(unsigned k, std::uint32_t taps, std::uint32_t state, double delta)
    : k_(k), taps_(taps), state_(state), delta_(delta) {
  if (k < 2 || k > 32) throw InvalidArgument("PRBS register length must be in [2, 32]");
  if ((taps & mask_of(k)) != taps || taps == 0) throw InvalidArgument("PRBS taps outside register");
  if ((state & mask_of(k)) != state || state == 0) {
    throw InvalidArgument("PRBS register must be non-zero and fit in k bits");
  }
  if (!std::isfinite(delta)) throw InvalidArgument("PRBS level must be finite");
}

int PrbsGenerator::next_bit() {
  const auto fb = static_cast<std::uint32_t>(std::popcount(state_ & taps_) & 1);
  state_ = ((state_ << 1) | fb) & mask_of(k_);
  return static_cast<int>(fb);
}

double PrbsGenerator::next() {
  next_bit();
  switch (state_ & 3u) {
    case 1u: return delta_;
    case 2u: return -delta_;
    default: return 0.0;
  }
}

const char* event_type(const ChaosEvent& e) {
  static constexpr const char* names[] = {"terminate_node",       "overload_node",
                                          "inject_latency",       "inject_network_error",
                                          "subnet_unavailable",   "restart_plc",
                                          "fail_sensor",          "input_step3",
                                          "input_prbs"};
  return names[e.index()];
}

double event_duration(const ChaosEvent& e) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RestartPlc>) {
          return v.downtime;
        } else if constexpr (std::is_same_v<T, InputStep>) {
          return 2.0 * v.window;
        } else {
          return v.duration;
        }
      },
      e);
}

void validate_event(const ChaosEvent& e) {
  const double d = event_duration(e);
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw InvalidArgument(std::string(event_type(e)) + ": duration must be positive");
  }
  if (const auto* o = std::get_if<OverloadNode>(&e); o && !(o->slowdown >= 1.0)) {
    throw InvalidArgument("overload_node: slowdown must be >= 1");
  }
  if (const auto* l = std::get_if<InjectLatency>(&e)) {
    if (!(l->added_latency >= 0.0) || !std::isfinite(l->added_latency)) {
      throw InvalidArgument("inject_latency: added latency must be finite and >= 0");
    }
    if (l->links.empty()) throw InvalidArgument("inject_latency: no links");
  }
  if (const auto* n = std::get_if<InjectNetworkError>(&e)) {
    if (!(n->drop_prob >= 0.0 && n->drop_prob <= 1.0)) {
      throw InvalidArgument("inject_network_error: drop probability must be in [0, 1]");
    }
    if (n->links.empty()) throw InvalidArgument("inject_network_error: no links");
  }
  if (const auto* s = std::get_if<FailSensor>(&e); s && s->mode == SensorFailure::None) {
    throw InvalidArgument("fail_sensor: mode must name a failure");
  }
  if (const auto* p = std::get_if<InputPrbs>(&e)) {
    if (!(p->clock > 0.0)) throw InvalidArgument("input_prbs: clock must be positive");
    PrbsGenerator check(p->k, p->state, p->delta);
  }
  if (const auto* s = std::get_if<InputStep>(&e); s && !std::isfinite(s->delta)) {
    throw InvalidArgument("input_step3: delta must be finite");
  }
}

EventSchedule::EventSchedule(std::vector<ScheduledEvent> entries) {
  for (const auto& e : entries) {
    if (!(e.start >= 0.0) || !std::isfinite(e.start)) {
      throw InvalidArgument("event start times must be finite and >= 0");
    }
    validate_event(e.event);
  }
  source_.resize(entries.size());
  std::iota(source_.begin(), source_.end(), 0);
  std::stable_sort(source_.begin(), source_.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].start < entries[b].start;
  });
  for (std::size_t i : source_) entries_.push_back(entries[i]);
}

namespace {

net::Network& need_network(ClosedLoop& loop, const char* what) {
  net::Network* net = loop.network();
  if (!net) throw UnknownTarget(std::string(what) + " needs a network");
  return *net;
}

std::size_t link_of(const net::Network& net, const LinkRef& l) {
  auto idx = net.link_index(net.id_of(l.src), net.id_of(l.dst));
  if (!idx) throw UnknownTarget("no link " + l.src + "->" + l.dst);
  return *idx;
}

NodeId router_of(const net::Network& net) {
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    if (net.base_node(NodeId::from_slot(i)).role == net::Role::Router) return NodeId::from_slot(i);
  }
  throw UnknownTarget("network has no router");
}

std::size_t input_of(const ClosedLoop& loop, const std::string& name) {
  auto idx = loop.plant().input_index(name);
  if (!idx) throw UnknownTarget("no plant input " + name);
  return *idx;
}

}  // namespace

AppliedEvent apply_event(ClosedLoop& loop, const ChaosEvent& e) {
  AppliedEvent a;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TerminateNode>) {
          if (net::Network* net = loop.network()) {
            a.faults.push_back(net->add_node_fault(net->id_of(v.node), {true, 1.0}));
          } else if (auto j = loop.agent_index(v.node)) {
            a.agent = j;
            loop.set_agent_halted(*j, true);
          } else {
            throw UnknownTarget("no node " + v.node);
          }
        } else if constexpr (std::is_same_v<T, OverloadNode>) {
          net::Network& net = need_network(loop, "overload_node");
          a.faults.push_back(net.add_node_fault(net.id_of(v.node), {false, v.slowdown}));
        } else if constexpr (std::is_same_v<T, InjectLatency>) {
          net::Network& net = need_network(loop, "inject_latency");
          for (const auto& l : v.links) {
            a.faults.push_back(net.add_link_fault(link_of(net, l), {v.added_latency, 0.0}));
          }
        } else if constexpr (std::is_same_v<T, InjectNetworkError>) {
          net::Network& net = need_network(loop, "inject_network_error");
          for (const auto& l : v.links) {
            a.faults.push_back(net.add_link_fault(link_of(net, l), {0.0, v.drop_prob}));
          }
        } else if constexpr (std::is_same_v<T, SubnetUnavailable>) {
          net::Network& net = need_network(loop, "subnet_unavailable");
          a.faults.push_back(net.add_node_fault(router_of(net), {true, 1.0}));
        } else if constexpr (std::is_same_v<T, RestartPlc>) {
          auto j = loop.agent_index(v.node);
          if (!j) throw UnknownTarget("no controller " + v.node);
          a.agent = j;
          a.saved_u = loop.agents()[*j].u;
          loop.set_agent_halted(*j, true);
          if (net::Network* net = loop.network()) {
            a.faults.push_back(net->add_node_fault(net->id_of(v.node), {true, 1.0}));
          }
        } else if constexpr (std::is_same_v<T, FailSensor>) {
          auto s = loop.sensor_index(v.node);
          if (!s) throw UnknownTarget("no sensor " + v.node);
          a.sensor = s;
          loop.set_sensor_failure(*s, v.mode, v.bias);
        } else if constexpr (std::is_same_v<T, InputStep>) {
          a.input = input_of(loop, v.input);
        } else if constexpr (std::is_same_v<T, InputPrbs>) {
          a.input = input_of(loop, v.input);
          a.prbs.emplace(v.k, v.state, v.delta);
        }
      },
      e);
  return a;
}

void revert_event(ClosedLoop& loop, const ChaosEvent& e, AppliedEvent& a) {
  if (net::Network* net = loop.network()) {
    for (net::FaultHandle h : a.faults) net->remove_fault(h);
  }
  a.faults.clear();
  if (const auto* r = std::get_if<RestartPlc>(&e)) {
    loop.set_agent_halted(*a.agent, false);
    loop.reset_agent(*a.agent, r->checkpoint ? a.saved_u : loop.initial_u(*a.agent));
  } else if (std::holds_alternative<TerminateNode>(e) && a.agent) {
    loop.set_agent_halted(*a.agent, false);
  } else if (a.sensor) {
    loop.set_sensor_failure(*a.sensor, SensorFailure::None);
  }
}

ChaosDriver::ChaosDriver(EventSchedule schedule, double origin)
    : schedule_(std::move(schedule)),
      origin_(origin),
      phase_(schedule_.entries().size(), Phase::Pending),
      applied_(schedule_.entries().size()) {}

void ChaosDriver::before_step(ClosedLoop& loop) {
  constexpr double eps = 1e-9;
  const double rel = loop.time() - origin_;
  const auto& entries = schedule_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (phase_[i] != Phase::Active) continue;
    if (rel >= entries[i].start + event_duration(entries[i].event) - eps) {
      revert_event(loop, entries[i].event, applied_[i]);
      phase_[i] = Phase::Done;
      log_.push_back({loop.time(), "revert", schedule_.source_index()[i], event_type(entries[i].event)});
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (phase_[i] != Phase::Pending || rel < entries[i].start - eps) continue;
    applied_[i] = apply_event(loop, entries[i].event);
    phase_[i] = Phase::Active;
    log_.push_back({loop.time(), "apply", schedule_.source_index()[i], event_type(entries[i].event)});
  }

  // Input offsets are recomputed from every event touching an input.
  std::vector<std::pair<std::size_t, double>> offsets;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    AppliedEvent& a = applied_[i];
    if (!a.input || phase_[i] == Phase::Pending) continue;
    double value = 0.0;
    if (phase_[i] == Phase::Active) {
      const double local = rel - entries[i].start;
      if (const auto* s = std::get_if<InputStep>(&entries[i].event)) {
        value = eval_perturbation({0.0, s->delta, 0.0, s->window}, local);
      } else if (const auto* p = std::get_if<InputPrbs>(&entries[i].event)) {
        const auto tick = static_cast<long>(std::floor(local / p->clock + eps));
        while (a.prbs_ticks <= tick) {
          a.prbs_level = a.prbs->next();
          ++a.prbs_ticks;
        }
        value = a.prbs_level;
      }
    }
    offsets.emplace_back(*a.input, value);
  }
  std::sort(offsets.begin(), offsets.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t k = 0; k < offsets.size();) {
    double sum = 0.0;
    std::size_t n = k;
    for (; n < offsets.size() && offsets[n].first == offsets[k].first; ++n) sum += offsets[n].second;
    loop.set_input_offset(offsets[k].first, sum);
    k = n;
  }
}

GuardResult guard_check(std::span<const std::pair<std::string, double>> values, double t,
                        const AbortGuard& g) {
  GuardContinue ok;
  if (!g.enabled) return ok;
  for (const auto& [name, v] : values) {
    if (!g.limits.contains(name)) continue;
    const Limits& l = g.limits.at(name);
    switch (classify(v, l)) {
      case LimitClass::ShutdownExceeded: {
        const bool high = l.shutdown_high && !(v <= *l.shutdown_high);
        return GuardAbort{name, v, high ? *l.shutdown_high : *l.shutdown_low, t};
      }
      case LimitClass::NormalExceeded:
        ok.normal_exceeded.push_back(name);
        break;
      case LimitClass::Normal:
        break;
    }
  }
  return ok;
}

GuardResult guard_check(const PlantModel& model, const PlantState& s, const AbortGuard& g) {
  std::vector<std::pair<std::string, double>> values;
  for (std::size_t i = 0; i < model.n(); ++i) {
    values.emplace_back(model.states[i].name, s.x(static_cast<Eigen::Index>(i)));
  }
  return guard_check(values, s.t, g);
}

}  // namespace icschaos
