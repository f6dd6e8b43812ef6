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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icschaos/control.hpp"
#include "icschaos/netsim.hpp"
#include "icschaos/plant.hpp"
#include "icschaos/topology.hpp"

namespace icschaos {

/// Sampled rows with named columns. Column 0 is always "t".
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t column(const std::string& name) const;  // throws UnknownVariable
  std::vector<double> series(const std::string& name) const;
  std::vector<double> times() const { return series("t"); }
  std::size_t size() const { return rows.size(); }
};

enum class SensorFailure { None, StuckAtLast, Bias, Silence };

const char* to_string(SensorFailure f);

/// Binds agent j (topology node j) to a plant input and a measured output.
/// With a network the agent lives on the network node named `name`; its local
/// measurement comes from `sensor` when set (else read straight off the plant)
/// and its integrator reaches the plant through `actuator` when set.
struct LoopAgent {
  std::string name;
  std::size_t input = 0;
  std::size_t output = 0;
  std::optional<std::string> sensor;
  std::optional<std::string> actuator;
};

/// A field sensor publishing one plant output channel. Agents using the
/// sensor subscribe automatically; `observers` adds historian/HMI taps.
struct LoopSensor {
  std::string name;
  std::size_t output = 0;
  std::vector<std::string> observers;
};

struct LoopSetup {
  Topology topology{1, {}};
  PlantModel plant;
  Vector x0;
  Vector nominal_input;  // applied to inputs no agent drives
  DisturbanceSignal disturbance;
  std::vector<AgentState> agents;
  std::vector<LoopAgent> wiring;
  std::vector<LoopSensor> sensors;
  std::optional<net::Network> network;
  double dt = 0.05;
  double sample_period = 1.0;
  double sensor_period = 0.0;   // 0 means every step
  double control_period = 0.0;  // 0 means every step
};

/// Sampled-data co-simulation of the plant and the DAPI agents. Every step
/// t_k: sensors publish, agents exchange measurements, agents compute
/// u_j' = -C_j x_j + sum a_jl x_l + beta_j from what they currently hold,
/// commands travel to actuators, the plant advances one RK4 step with the
/// held inputs, and the integrators take an Euler step. Network deliveries are
/// processed at step boundaries, so latencies round up to the next step.
class ClosedLoop {
 public:
  explicit ClosedLoop(LoopSetup setup);

  double time() const { return state_.t; }
  const PlantState& state() const { return state_; }
  const PlantModel& plant() const { return setup_.plant; }
  const Vector& applied_input() const { return applied_; }
  std::span<const AgentState> agents() const { return agents_; }
  const Trajectory& trajectory() const { return trajectory_; }
  Trajectory take_trajectory() { return std::move(trajectory_); }
  std::optional<KpiSample> last_kpi() const { return last_kpi_; }

  /// Advances one dt. Records a row when the sample period elapses.
  /// Throws NonFiniteState on integrator blow-up.
  void advance();
  void run_until(double t_end);
  /// Appends a row for the current time unless one is already there.
  void record_sample();

  net::Network* network() { return setup_.network ? &*setup_.network : nullptr; }
  const net::Network* network() const { return setup_.network ? &*setup_.network : nullptr; }

  std::optional<std::size_t> agent_index(const std::string& name) const;
  std::optional<std::size_t> sensor_index(const std::string& name) const;
  void set_agent_halted(std::size_t j, bool halted);
  bool agent_running(std::size_t j) const;
  void reset_agent(std::size_t j, double u);
  double initial_u(std::size_t j) const { return setup_.agents.at(j).u; }
  void set_sensor_failure(std::size_t s, SensorFailure mode, double bias = 0.0);
  void set_input_offset(std::size_t input, double offset);
  double input_offset(std::size_t input) const { return offsets_(static_cast<Eigen::Index>(input)); }
  const DisturbanceSignal& disturbance() const { return setup_.disturbance; }
  void set_disturbance(DisturbanceSignal d) { setup_.disturbance = std::move(d); }

 private:
  struct SensorRuntime {
    NodeId node;
    std::vector<NodeId> subscribers;
    SensorFailure failure = SensorFailure::None;
    double bias = 0.0;
    std::optional<double> last_emitted;
  };
  struct AgentRuntime {
    std::optional<NodeId> node;
    std::optional<NodeId> sensor;
    std::optional<NodeId> actuator;
    std::vector<std::size_t> listeners;  // agents l with a_lj > 0
    bool halted = false;
    double rate = 0.0;
    double held_command = 0.0;  // actuator zero-order hold
  };

  static std::size_t periods(double period, double dt, const char* what);
  void publish_sensors(const Vector& y);
  void exchange_measurements(const Vector& y);
  void compute_rates(const Vector& y);
  Vector input_for_step();
  void append_row();

  LoopSetup setup_;
  PlantState state_;
  std::vector<AgentState> agents_;
  std::vector<AgentRuntime> rt_;
  std::vector<SensorRuntime> sensors_;
  Vector applied_;
  Vector offsets_;
  std::vector<std::optional<double>> local_;
  std::size_t step_ = 0;
  std::size_t sample_every_ = 1;
  std::size_t sensor_every_ = 1;
  std::size_t control_every_ = 1;
  std::vector<KpiPoint> kpi_window_;
  std::optional<KpiSample> last_kpi_;
  Trajectory trajectory_;
};

/// Runs a fresh closed loop for `duration` minutes. `hook`, when given, is
/// called before every step with the loop so callers can inject events.
using StepHook = std::function<void(ClosedLoop&)>;
Trajectory simulate_closed_loop(LoopSetup setup, double duration, const StepHook& hook = {});

}  // namespace icschaos
