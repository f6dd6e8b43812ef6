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

#include "icschaos/closed_loop.hpp"

#include <algorithm>
#include <cmath>

#include "icschaos/errors.hpp"

namespace icschaos {

std::optional<std::size_t> Trajectory::find(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::size_t Trajectory::column(const std::string& name) const {
  if (auto c = find(name)) return *c;
  throw UnknownVariable("trajectory has no column " + name);
}

std::vector<double> Trajectory::series(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

const char* to_string(SensorFailure f) {
  switch (f) {
    case SensorFailure::None: return "none";
    case SensorFailure::StuckAtLast: return "stuck_at_last";
    case SensorFailure::Bias: return "bias";
    case SensorFailure::Silence: return "silence";
  }
  return "?";
}

std::size_t ClosedLoop::periods(double period, double dt, const char* what) {
  if (period == 0.0) return 1;
  const double ratio = std::round(period / dt);
  if (!(period > 0.0) || ratio < 1.0 || std::abs(ratio * dt - period) > 1e-9 * std::max(1.0, period)) {
    throw InvalidArgument(std::string(what) + " must be a positive multiple of dt");
  }
  return static_cast<std::size_t>(ratio);
}

ClosedLoop::ClosedLoop(LoopSetup setup) : setup_(std::move(setup)) {
  const PlantModel& p = setup_.plant;
  const std::size_t m = setup_.topology.size();
  if (!(setup_.dt > 0.0) || !std::isfinite(setup_.dt)) throw InvalidArgument("dt must be positive");
  if (static_cast<std::size_t>(setup_.x0.size()) != p.n()) throw DimensionMismatch("x0 vs plant states");
  if (static_cast<std::size_t>(setup_.nominal_input.size()) != p.m()) {
    throw DimensionMismatch("nominal input vs plant inputs");
  }
  if (setup_.disturbance.dim() != p.disturbance_dim) {
    throw DimensionMismatch("disturbance dimension vs plant");
  }
  if (setup_.agents.size() != m || setup_.wiring.size() != m) {
    throw DimensionMismatch("one agent and one wiring entry per topology node");
  }
  sample_every_ = periods(setup_.sample_period, setup_.dt, "sample period");
  sensor_every_ = periods(setup_.sensor_period, setup_.dt, "sensor period");
  control_every_ = periods(setup_.control_period, setup_.dt, "control period");

  agents_ = setup_.agents;
  rt_.resize(m);
  local_.assign(m, std::nullopt);
  std::vector<bool> driven(p.m(), false);
  const Eigen::MatrixXd& A = setup_.topology.adjacency();
  net::Network* net = network();
  for (std::size_t j = 0; j < m; ++j) {
    const LoopAgent& w = setup_.wiring[j];
    if (w.input >= p.m() || w.output >= p.outputs.size()) {
      throw InvalidArgument("agent " + w.name + " wired to a missing input or output");
    }
    if (driven[w.input]) throw InvalidArgument("input " + p.inputs[w.input].name + " driven twice");
    driven[w.input] = true;
    for (std::size_t l = 0; l < m; ++l) {
      if (l != j && A(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) > 0.0) {
        rt_[j].listeners.push_back(l);
      }
    }
    rt_[j].held_command = agents_[j].u;
    if (net) {
      rt_[j].node = net->id_of(w.name);
      if (w.sensor) rt_[j].sensor = net->id_of(*w.sensor);
      if (w.actuator) rt_[j].actuator = net->id_of(*w.actuator);
    } else if (w.sensor || w.actuator) {
      throw InvalidArgument("agent " + w.name + " names a sensor or actuator but there is no network");
    }
  }
  if (!setup_.sensors.empty() && !net) throw InvalidArgument("sensors need a network");
  for (const LoopSensor& s : setup_.sensors) {
    if (s.output >= p.outputs.size()) throw InvalidArgument("sensor " + s.name + " reads a missing output");
    SensorRuntime r;
    r.node = net->id_of(s.name);
    for (std::size_t j = 0; j < m; ++j) {
      if (rt_[j].sensor == r.node) r.subscribers.push_back(*rt_[j].node);
    }
    for (const auto& o : s.observers) r.subscribers.push_back(net->id_of(o));
    sensors_.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (rt_[j].sensor && !sensor_index(*setup_.wiring[j].sensor)) {
      throw InvalidArgument("agent " + setup_.wiring[j].name + " reads undeclared sensor " +
                            *setup_.wiring[j].sensor);
    }
  }

  state_ = {0.0, setup_.x0};
  offsets_ = Vector::Zero(static_cast<Eigen::Index>(p.m()));
  applied_ = input_for_step();

  trajectory_.columns.push_back("t");
  for (const auto& v : p.states) trajectory_.columns.push_back(v.name);
  for (const auto& v : p.inputs) trajectory_.columns.push_back(v.name);
  if (p.flows) {
    for (const char* k : {"throughput_rate", "input_feed_rate", "output_yield"}) {
      trajectory_.columns.push_back(k);
    }
    kpi_window_.push_back({0.0, p.flows(state_.x, applied_, setup_.disturbance.at(0.0))});
  }
  for (const auto& w : setup_.wiring) trajectory_.columns.push_back("ctrl:" + w.name);
  append_row();
}

std::optional<std::size_t> ClosedLoop::agent_index(const std::string& name) const {
  for (std::size_t j = 0; j < setup_.wiring.size(); ++j) {
    if (setup_.wiring[j].name == name) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> ClosedLoop::sensor_index(const std::string& name) const {
  for (std::size_t s = 0; s < setup_.sensors.size(); ++s) {
    if (setup_.sensors[s].name == name) return s;
  }
  return std::nullopt;
}

bool ClosedLoop::agent_running(std::size_t j) const {
  if (rt_.at(j).halted) return false;
  const net::Network* net = network();
  return !(net && rt_[j].node && !net->alive(*rt_[j].node));
}

void ClosedLoop::set_agent_halted(std::size_t j, bool halted) { rt_.at(j).halted = halted; }

void ClosedLoop::reset_agent(std::size_t j, double u) {
  agents_.at(j).u = u;
  rt_[j].rate = 0.0;
}

void ClosedLoop::set_sensor_failure(std::size_t s, SensorFailure mode, double bias) {
  SensorRuntime& r = sensors_.at(s);
  r.failure = mode;
  r.bias = mode == SensorFailure::Bias ? bias : 0.0;
}

void ClosedLoop::set_input_offset(std::size_t input, double offset) {
  if (input >= setup_.plant.m()) throw UnknownTarget("input index out of range");
  offsets_(static_cast<Eigen::Index>(input)) = offset;
}

void ClosedLoop::publish_sensors(const Vector& y) {
  net::Network& net = *network();
  const double t = state_.t;
  for (std::size_t s = 0; s < sensors_.size(); ++s) {
    SensorRuntime& r = sensors_[s];
    if (!net.alive(r.node)) continue;
    double value = y(static_cast<Eigen::Index>(setup_.sensors[s].output));
    switch (r.failure) {
      case SensorFailure::None: break;
      case SensorFailure::Bias: value += r.bias; break;
      case SensorFailure::StuckAtLast:
        if (r.last_emitted) value = *r.last_emitted;
        break;
      case SensorFailure::Silence: continue;
    }
    r.last_emitted = value;
    for (NodeId sub : r.subscribers) {
      net.send(r.node, sub, net::StateSample{r.node, value, t}, t);
    }
  }
}

void ClosedLoop::exchange_measurements(const Vector& y) {
  net::Network& net = *network();
  const double t = state_.t;
  for (std::size_t j = 0; j < agents_.size(); ++j) {
    local_[j].reset();
    if (!agent_running(j)) continue;
    if (rt_[j].sensor) {
      if (auto h = net.last_known(*rt_[j].node, *rt_[j].sensor)) local_[j] = h->value;
    } else {
      local_[j] = y(static_cast<Eigen::Index>(setup_.wiring[j].output));
    }
    if (!local_[j]) continue;
    for (std::size_t l : rt_[j].listeners) {
      net.send(*rt_[j].node, *rt_[l].node, net::StateSample{*rt_[j].node, *local_[j], t}, t);
    }
  }
}

void ClosedLoop::compute_rates(const Vector& y) {
  net::Network* net = network();
  const std::size_t m = agents_.size();
  const Eigen::MatrixXd& A = setup_.topology.adjacency();
  std::vector<double> weights(m), remote(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!agent_running(j)) {
      rt_[j].rate = 0.0;
      continue;
    }
    std::optional<double> local =
        net ? local_[j] : std::optional<double>(y(static_cast<Eigen::Index>(setup_.wiring[j].output)));
    if (!local) {
      rt_[j].rate = 0.0;
    } else {
      for (std::size_t l = 0; l < m; ++l) {
        weights[l] = l == j ? 0.0 : A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
        remote[l] = *local;
        if (weights[l] == 0.0) continue;
        if (!net) {
          remote[l] = y(static_cast<Eigen::Index>(setup_.wiring[l].output));
        } else if (auto h = net->last_known(*rt_[j].node, *rt_[l].node)) {
          remote[l] = h->value;
        }
      }
      rt_[j].rate = dapi_rate(agents_[j], *local, weights, remote);
    }
    if (net && rt_[j].actuator) {
      net->send(*rt_[j].node, *rt_[j].actuator, net::Command{*rt_[j].actuator, agents_[j].u},
                state_.t);
    }
  }
}

Vector ClosedLoop::input_for_step() {
  Vector u = setup_.nominal_input;
  const net::Network* net = network();
  for (std::size_t j = 0; j < agents_.size(); ++j) {
    double value = agents_[j].u;
    if (rt_[j].actuator) {
      if (auto c = net->last_command(*rt_[j].actuator)) rt_[j].held_command = *c;
      value = rt_[j].held_command;
    }
    u(static_cast<Eigen::Index>(setup_.wiring[j].input)) = value;
  }
  return u + offsets_;
}

void ClosedLoop::advance() {
  const PlantModel& p = setup_.plant;
  const Vector d = setup_.disturbance.at(state_.t);
  const Vector y = p.output(state_.x, applied_, d);
  const bool sensor_tick = step_ % sensor_every_ == 0;
  const bool control_tick = step_ % control_every_ == 0;
  if (net::Network* net = network()) {
    if (sensor_tick) publish_sensors(y);
    net->deliver_due(state_.t);
    if (control_tick) exchange_measurements(y);
    net->deliver_due(state_.t);
    if (control_tick) compute_rates(y);
    net->deliver_due(state_.t);
  } else if (control_tick) {
    compute_rates(y);
  }
  applied_ = input_for_step();
  state_ = step(p, state_, applied_, setup_.disturbance, setup_.dt);
  for (std::size_t j = 0; j < agents_.size(); ++j) {
    if (agent_running(j)) agents_[j].u += setup_.dt * rt_[j].rate;
  }
  ++step_;
  state_.t = static_cast<double>(step_) * setup_.dt;
  if (p.flows) {
    kpi_window_.push_back({state_.t, p.flows(state_.x, applied_, setup_.disturbance.at(state_.t))});
  }
  if (step_ % sample_every_ == 0) append_row();
}

void ClosedLoop::run_until(double t_end) {
  while (state_.t < t_end - 1e-9) advance();
}

void ClosedLoop::record_sample() {
  if (!trajectory_.rows.empty() && std::abs(trajectory_.rows.back()[0] - state_.t) <= 1e-9) return;
  append_row();
}

void ClosedLoop::append_row() {
  const PlantModel& p = setup_.plant;
  std::vector<double> row;
  row.reserve(trajectory_.columns.size());
  row.push_back(state_.t);
  for (Eigen::Index i = 0; i < state_.x.size(); ++i) row.push_back(state_.x(i));
  for (Eigen::Index i = 0; i < applied_.size(); ++i) row.push_back(applied_(i));
  if (p.flows) {
    KpiSample k;
    if (kpi_window_.size() >= 2) {
      k = kpi(kpi_window_);
    } else {
      const FlowRates& f = kpi_window_.back().flows;
      k.t_start = k.t_end = state_.t;
      k.throughput_rate = f.product;
      k.input_feed_rate = f.feed;
      k.output_yield = f.reactive_feed > 0.0 ? std::clamp(f.product / f.reactive_feed, 0.0, 1.0) : 0.0;
    }
    last_kpi_ = k;
    row.push_back(k.throughput_rate);
    row.push_back(k.input_feed_rate);
    row.push_back(k.output_yield);
    kpi_window_.erase(kpi_window_.begin(), kpi_window_.end() - 1);
  }
  for (const auto& a : agents_) row.push_back(a.u);
  trajectory_.rows.push_back(std::move(row));
}

Trajectory simulate_closed_loop(LoopSetup setup, double duration, const StepHook& hook) {
  if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
  const double dt = setup.dt;
  ClosedLoop loop(std::move(setup));
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  for (std::size_t k = 0; k < steps; ++k) {
    if (hook) hook(loop);
    loop.advance();
  }
  return loop.take_trajectory();
}

}  // namespace icschaos
