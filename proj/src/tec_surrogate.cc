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

#include "icschaos/tec_surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace icschaos::tec {

double Params::heat_gain() const {
  return cooling_rate_per_min * (design_temp_C - cooling_temp_C) / (feed_A_kscmh + feed_C_kscmh);
}

Vector Params::nominal_inputs() const {
  Vector u(3);
  u << feed_A_kscmh, feed_B_kg_per_h, feed_C_kscmh;
  return u;
}

double yield_at(const Params& p, double temperature_C) {
  const double z = (temperature_C - p.optimal_temp_C) / p.yield_width_C;
  return p.max_yield * std::exp(-z * z);
}

namespace {

double reactive_feed(const Vector& u) { return std::max(u(0), 0.0) + std::max(u(2), 0.0); }

Vector level_targets(const Params& p, const Vector& u) {
  const double nominal = p.feed_A_kscmh + p.feed_C_kscmh;
  const double imbalance = (reactive_feed(u) - nominal) / nominal;
  Vector v(4);
  v << p.pressure_kPa * (1.0 + p.pressure_gain * imbalance),
      p.reactor_level_m3 * (1.0 + p.level_gain * imbalance),
      p.separator_level_m3 * (1.0 + p.level_gain * imbalance),
      p.stripper_level_m3 * (1.0 + p.level_gain * imbalance);
  return v;
}

}  // namespace

PlantModel make_plant(const Params& p) {
  PlantModel m;
  m.states = {{"reactor_temperature_C", "degC"},
              {"reactor_pressure_kPa", "kPa"},
              {"reactor_level_m3", "m3"},
              {"separator_level_m3", "m3"},
              {"stripper_level_m3", "m3"}};
  m.inputs = {{"feed_A_kscmh", "kscmh"}, {"feed_B_kg_per_h", "kg/h"}, {"feed_C_kscmh", "kscmh"}};
  m.outputs = {{"temperature_dev_C", "degC"}, {"yield_dev", "1"}};
  m.disturbance_dim = 1;

  const double heat_gain = p.heat_gain();
  m.drift = [p, heat_gain](const Vector& x, const Vector& u, const Vector& d) -> Vector {
    Vector dx(5);
    const double coolant = p.cooling_temp_C + d(0);
    dx(kTemperature) =
        heat_gain * reactive_feed(u) - p.cooling_rate_per_min * (x(kTemperature) - coolant);
    dx.tail(4) = (level_targets(p, u) - x.tail(4)) / p.level_time_constant_min;
    return dx;
  };
  const double nominal_yield = yield_at(p, p.design_temp_C);
  m.output = [p, nominal_yield](const Vector& x, const Vector&, const Vector&) -> Vector {
    Vector y(2);
    y << x(kTemperature) - p.design_temp_C, yield_at(p, x(kTemperature)) - nominal_yield;
    return y;
  };
  m.flows = [p](const Vector& x, const Vector& u, const Vector&) {
    const double reactive = reactive_feed(u);
    return FlowRates{yield_at(p, x(kTemperature)) * reactive,
                     reactive + std::max(u(1), 0.0), reactive};
  };
  m.equilibrium = [p, heat_gain](const Vector& u, const Vector& d) -> Vector {
    Vector x(5);
    x(kTemperature) =
        p.cooling_temp_C + d(0) + heat_gain * reactive_feed(u) / p.cooling_rate_per_min;
    x.tail(4) = level_targets(p, u);
    return x;
  };
  return m;
}

ProcessLimits table_limits() {
  std::map<std::string, Limits> l;
  l["reactor_pressure_kPa"] = {std::nullopt, 2895.0, std::nullopt, 3000.0};
  l["reactor_level_m3"] = {11.8, 21.3, 2.0, 24.0};
  l["reactor_temperature_C"] = {std::nullopt, 150.0, std::nullopt, 175.0};
  l["separator_level_m3"] = {3.3, 9.0, 1.0, 12.0};
  l["stripper_level_m3"] = {3.5, 6.6, 1.0, 8.0};
  return ProcessLimits(std::move(l));
}

}  // namespace icschaos::tec
