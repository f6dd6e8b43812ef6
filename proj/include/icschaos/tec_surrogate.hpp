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

#include "icschaos/plant.hpp"

namespace icschaos::tec {

// Single-reaction surrogate of the Tennessee Eastman process. State order:
// reactor temperature, reactor pressure, reactor level, separator level,
// stripper level. Inputs: feed A, feed B, feed C. One disturbance channel:
// cooling-water temperature offset in degC.
//
//   dT/dt = heat_gain * (uA + uC) - cooling_rate * (T - (T_cool + delta))
//   Y(T)  = max_yield * exp(-((T - T_opt) / yield_width)^2)
//   level' = (nominal * (1 + gain * imbalance) - level) / tau
//
// imbalance is the relative deviation of uA + uC from its nominal value.

struct Params {
  double cooling_temp_C = 25.0;
  double cooling_rate_per_min = 0.2;
  double design_temp_C = 120.0;   // equilibrium at nominal feeds
  double max_yield = 0.95;
  double optimal_temp_C = 120.0;
  double yield_width_C = 40.0;
  double feed_A_kscmh = 0.25;
  double feed_B_kg_per_h = 3686.0;
  double feed_C_kscmh = 9.35;
  double level_time_constant_min = 20.0;
  double pressure_kPa = 2705.0;
  double reactor_level_m3 = 16.55;
  double separator_level_m3 = 6.15;
  double stripper_level_m3 = 5.05;
  double pressure_gain = 0.1;
  double level_gain = 0.2;

  /// k_r * h_rxn so that nominal feeds settle at design_temp_C.
  double heat_gain() const;
  Vector nominal_inputs() const;
};

enum StateIndex : Eigen::Index {
  kTemperature = 0,
  kPressure = 1,
  kReactorLevel = 2,
  kSeparatorLevel = 3,
  kStripperLevel = 4,
};

double yield_at(const Params& p, double temperature_C);

PlantModel make_plant(const Params& p = {});

/// Reactor, separator and stripper envelopes from the TE operating table.
ProcessLimits table_limits();

}  // namespace icschaos::tec
