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

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace icschaos {

using Vector = Eigen::VectorXd;

/// Piecewise-constant disturbance delta(t). Before the first breakpoint the
/// signal is the zero vector.
class DisturbanceSignal {
 public:
  explicit DisturbanceSignal(std::size_t dim = 0) : dim_(dim) {}
  DisturbanceSignal(std::size_t dim, std::vector<std::pair<double, Vector>> breakpoints);

  std::size_t dim() const { return dim_; }
  const std::vector<std::pair<double, Vector>>& breakpoints() const { return breakpoints_; }
  Vector at(double t) const;
  /// Same signal with every breakpoint moved later by `offset` minutes.
  DisturbanceSignal shifted(double offset) const;

 private:
  std::size_t dim_;
  std::vector<std::pair<double, Vector>> breakpoints_;
};

struct PlantState {
  double t = 0.0;  // minutes
  Vector x;
};

struct VariableInfo {
  std::string name;
  std::string unit;
};

/// Boundary flows used for KPI extraction.
struct FlowRates {
  double product = 0.0;        // end product out, per minute
  double feed = 0.0;           // all input materials in
  double reactive_feed = 0.0;  // feed that can turn into product
};

/// x' = g(x, u, delta), dy = h(x, u, delta).
struct PlantModel {
  using Drift = std::function<Vector(const Vector& x, const Vector& u, const Vector& d)>;
  using Output = std::function<Vector(const Vector& x, const Vector& u, const Vector& d)>;
  using Flows = std::function<FlowRates(const Vector& x, const Vector& u, const Vector& d)>;
  using Equilibrium = std::function<Vector(const Vector& u, const Vector& d)>;

  std::vector<VariableInfo> states;
  std::vector<VariableInfo> inputs;
  std::vector<VariableInfo> outputs;
  std::size_t disturbance_dim = 0;
  Drift drift;
  Output output;
  Flows flows;              // optional; plants without KPIs leave it empty
  Equilibrium equilibrium;  // optional analytic phi(u, delta)

  std::size_t n() const { return states.size(); }
  std::size_t m() const { return inputs.size(); }
  std::optional<std::size_t> state_index(const std::string& name) const;
  std::optional<std::size_t> input_index(const std::string& name) const;
  std::optional<std::size_t> output_index(const std::string& name) const;
};

/// Classical fixed-step RK4 with u and delta held over the step. Throws
/// NonFiniteState if the new state has a non-finite entry.
PlantState step(const PlantModel& model, const PlantState& s, const Vector& u,
                const DisturbanceSignal& delta, double dt);

Vector output_deviation(const PlantModel& model, const PlantState& s, const Vector& u,
                        const DisturbanceSignal& delta);

struct EquilibriumParams {
  double gamma = 1.0;
  double d = 0.0;
};

/// (1/gamma) * 1 * (1^T u_bar - d). Every component is the same double.
Vector equilibrium_map(const Vector& u_bar, const EquilibriumParams& p);

struct Limits {
  std::optional<double> normal_low;
  std::optional<double> normal_high;
  std::optional<double> shutdown_low;
  std::optional<double> shutdown_high;
};

class ProcessLimits {
 public:
  ProcessLimits() = default;
  explicit ProcessLimits(std::map<std::string, Limits> by_name);

  const Limits& at(const std::string& name) const;  // throws UnknownVariable
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
  const std::map<std::string, Limits>& all() const { return by_name_; }

  /// Empty when shutdown_low <= normal_low <= normal_high <= shutdown_high
  /// holds among the present bounds; otherwise one message per broken pair.
  static std::vector<std::string> ordering_errors(const std::string& name, const Limits& l);

 private:
  std::map<std::string, Limits> by_name_;
};

enum class LimitClass { Normal, NormalExceeded, ShutdownExceeded };

const char* to_string(LimitClass c);

LimitClass classify(double value, const Limits& l);

/// Classifies each named value. Throws UnknownVariable for a name without limits.
std::vector<std::pair<std::string, LimitClass>> check_limits(
    std::span<const std::pair<std::string, double>> sample, const ProcessLimits& limits);

struct KpiPoint {
  double t = 0.0;
  FlowRates flows;
};

struct KpiSample {
  double throughput_rate = 0.0;
  double input_feed_rate = 0.0;
  double output_yield = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Trapezoid-averaged boundary KPIs over the window spanned by `window`.
/// Yield is product over reactive feed, 0 when no reactive feed was consumed.
/// Throws EmptyWindow for fewer than two points or a zero-length window.
KpiSample kpi(std::span<const KpiPoint> window);

struct StabilityVerdict {
  bool stable = false;
  double rate = 0.0;  // -max Re(lambda)
};

inline constexpr double kStabilityMargin = 1e-9;

StabilityVerdict verify_exponential_stability(const Eigen::MatrixXd& a_cl);

/// x_j' = -x_j + u_j, dy = x. Used to exercise the control layer.
PlantModel make_linear_test_plant(std::size_t m);

}  // namespace icschaos
