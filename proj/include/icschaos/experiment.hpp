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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icschaos/chaos.hpp"
#include "icschaos/closed_loop.hpp"
#include "icschaos/control.hpp"
#include "icschaos/plant.hpp"

namespace icschaos {

struct SteadyStateSpec {
  std::string metric;
  double window = 30.0;  // minutes averaged for the baseline
  double band = 0.01;    // absolute tolerance around the baseline
  double hold = 30.0;    // minutes the band must hold, >= window
  void validate() const;
};

struct SteadyWindow {
  double t_a = 0.0;
  double t_b = 0.0;
  double baseline = 0.0;
};

/// Earliest window [t_a, t_b] of length >= hold whose samples all stay within
/// band of the mean of the trailing `window` minutes ending at t_b.
std::optional<SteadyWindow> detect_steady_state(std::span<const double> t,
                                                std::span<const double> v,
                                                const SteadyStateSpec& spec);
/// Same test for the single window ending at the last sample.
std::optional<SteadyWindow> steady_at_end(std::span<const double> t, std::span<const double> v,
                                          const SteadyStateSpec& spec);

struct Hypothesis {
  std::string metric;
  double lo = 0.0;
  double hi = 1.0;
  double horizon = 0.0;  // minutes after injection
  void validate() const;
};

struct BlastRadius {
  double fraction_violating = 0.0;
  double violation_integral = 0.0;
  int shutdown_events = 0;
  std::vector<std::string> violating;
};

/// Impact of a run over [t_start, t_end] on every limited variable that has a
/// trajectory column. Excess beyond a normal bound is scaled by the normal
/// band width; a one-sided band uses the distance to the shutdown bound on
/// that side instead. Integration is left-Riemann over the samples.
BlastRadius blast_radius(const Trajectory& traj, const ProcessLimits& limits, double t_start,
                         double t_end);

struct DireMetrics {
  double p_initial = 0.0;
  double p_min = 0.0;
  double t_dip = 0.0;
  std::optional<double> t_reentry;  // first return into the band after the dip
  std::optional<double> t_recover;  // first return that then holds for `hold`
  double p_final = 0.0;
  double restoration_ratio = 0.0;
};

/// Resilience landmarks of v over samples with t >= t_start.
DireMetrics dire_metrics(std::span<const double> t, std::span<const double> v, double p_initial,
                         double band, double hold, double t_start);

struct ExperimentSpec {
  LoopSetup setup;  // disturbance breakpoints are relative to the injection time
  SteadyStateSpec steady;
  Hypothesis hypothesis;
  EventSchedule schedule;
  AbortGuard guard;
  double duration = 0.0;      // minutes simulated after injection
  double settle_limit = 0.0;  // minutes allowed to reach steady state
  std::uint64_t seed = 0;
  std::optional<SetpointSolution> setpoints;
  std::optional<OptimalityCertificate> certificate;
  void validate() const;
};

enum class VerdictKind { Held, Disproved, Aborted, NoSteadyState };

const char* to_string(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::Held;
  double time = 0.0;           // first violation or abort time
  double value = 0.0;          // metric value at the first violation
  double max_excursion = 0.0;  // largest distance outside the band
  std::string reason;
  std::optional<GuardAbort> abort;
};

struct ExperimentResult {
  Verdict verdict;
  BlastRadius blast;
  DireMetrics dire;
  std::optional<SteadyWindow> steady;
  double t_injection = 0.0;
  Trajectory trajectory;
  std::vector<EventLogEntry> events;
  std::vector<net::Message> messages;
  std::vector<std::string> node_names;  // network node names by slot
  std::vector<std::string> normal_exceeded;  // state variables the guard saw past normal
  std::optional<SetpointSolution> setpoints;
  std::optional<OptimalityCertificate> certificate;
  std::uint64_t seed = 0;
};

/// Settle to steady state, inject, observe, and score. Deterministic in spec.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct BatchOutcome {
  std::optional<ExperimentResult> result;
  std::string error;
};

/// Runs every spec on up to `parallelism` threads; output follows spec order
/// and a failing spec only affects its own slot.
std::vector<BatchOutcome> batch_run(std::span<const ExperimentSpec> specs, unsigned parallelism);

}  // namespace icschaos
