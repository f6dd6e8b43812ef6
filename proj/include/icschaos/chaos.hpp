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
#include <utility>
#include <variant>
#include <vector>

#include "icschaos/closed_loop.hpp"
#include "icschaos/plant.hpp"

namespace icschaos {

// ---------------------------------------------------------------------------
// Input perturbations.
// ---------------------------------------------------------------------------

/// Three-level test signal: u0 before t0, u0 + delta for one window, u0 -
/// delta for the next, u0 afterwards.
struct PerturbationSequence {
  double u0 = 0.0;
  double delta = 0.0;
  double t0 = 0.0;
  double window = 1440.0;  // minutes
};

double eval_perturbation(const PerturbationSequence& p, double t);

/// Fibonacci LFSR. Each step shifts the register left by one and feeds in the
/// parity of the tapped bits; that new bit is the freshest output bit. The two
/// freshest bits (previous, new) map to a level: 00 -> 0, 01 -> +delta,
/// 10 -> -delta, 11 -> 0.
class PrbsGenerator {
 public:
  explicit PrbsGenerator(unsigned k = 10, std::uint32_t state = 1, double delta = 1.0);
  PrbsGenerator(unsigned k, std::uint32_t taps, std::uint32_t state, double delta);

  /// Tap mask of a primitive feedback polynomial for 2 <= k <= 24.
  static std::uint32_t maximal_taps(unsigned k);

  int next_bit();
  double next();  // one step, returns the mapped level

  unsigned k() const { return k_; }
  std::uint32_t taps() const { return taps_; }
  std::uint32_t state() const { return state_; }
  double delta() const { return delta_; }

 private:
  unsigned k_;
  std::uint32_t taps_;
  std::uint32_t state_;
  double delta_;
};

// ---------------------------------------------------------------------------
// Events.
// ---------------------------------------------------------------------------

/// Directed link named by its endpoint nodes.
struct LinkRef {
  std::string src;
  std::string dst;
};

struct TerminateNode {
  std::string node;
  double duration = 0.0;
};
struct OverloadNode {
  std::string node;
  double slowdown = 1.0;
  double duration = 0.0;
};
struct InjectLatency {
  std::vector<LinkRef> links;
  double added_latency = 0.0;  // minutes
  double duration = 0.0;
};
struct InjectNetworkError {
  std::vector<LinkRef> links;
  double drop_prob = 0.0;
  double duration = 0.0;
};
struct SubnetUnavailable {
  double duration = 0.0;
};
struct RestartPlc {
  std::string node;
  double downtime = 0.0;
  bool checkpoint = false;  // restore the integrator saved at shutdown instead of u0
};
struct FailSensor {
  std::string node;
  SensorFailure mode = SensorFailure::StuckAtLast;
  double bias = 0.0;
  double duration = 0.0;
};
/// Three-level step on one plant input, starting at the event start.
struct InputStep {
  std::string input;
  double delta = 0.0;
  double window = 1440.0;
};
/// PRBS offset on one plant input, one level per clock period.
struct InputPrbs {
  std::string input;
  double delta = 0.0;
  unsigned k = 10;
  std::uint32_t state = 1;
  double clock = 1.0;
  double duration = 0.0;
};

using ChaosEvent = std::variant<TerminateNode, OverloadNode, InjectLatency, InjectNetworkError,
                                SubnetUnavailable, RestartPlc, FailSensor, InputStep, InputPrbs>;

const char* event_type(const ChaosEvent& e);
double event_duration(const ChaosEvent& e);
/// Throws InvalidArgument when a magnitude or duration is out of range.
void validate_event(const ChaosEvent& e);

struct ScheduledEvent {
  double start = 0.0;
  ChaosEvent event;
};

/// Entries ordered by start time; equal starts keep their list order.
class EventSchedule {
 public:
  EventSchedule() = default;
  explicit EventSchedule(std::vector<ScheduledEvent> entries);

  const std::vector<ScheduledEvent>& entries() const { return entries_; }
  /// Position of each sorted entry in the original list.
  const std::vector<std::size_t>& source_index() const { return source_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ScheduledEvent> entries_;
  std::vector<std::size_t> source_;
};

/// What apply_event changed, so revert_event can undo exactly that.
struct AppliedEvent {
  std::vector<net::FaultHandle> faults;
  std::optional<std::size_t> agent;
  std::optional<std::size_t> sensor;
  std::optional<std::size_t> input;
  double saved_u = 0.0;
  std::optional<PrbsGenerator> prbs;
  long prbs_ticks = 0;
  double prbs_level = 0.0;
};

/// Throws UnknownTarget when a named node, link, sensor or input is missing.
AppliedEvent apply_event(ClosedLoop& loop, const ChaosEvent& e);
void revert_event(ClosedLoop& loop, const ChaosEvent& e, AppliedEvent& applied);

struct EventLogEntry {
  double t = 0.0;
  std::string action;  // "apply" or "revert"
  std::size_t index = 0;
  std::string type;
};

/// Applies a schedule whose times are relative to `origin`. Call before every
/// step; events due at or before the current time are applied, expired ones
/// reverted (reverts first), and input offsets refreshed.
class ChaosDriver {
 public:
  ChaosDriver(EventSchedule schedule, double origin);

  void before_step(ClosedLoop& loop);
  const std::vector<EventLogEntry>& log() const { return log_; }

 private:
  enum class Phase { Pending, Active, Done };

  EventSchedule schedule_;
  double origin_;
  std::vector<Phase> phase_;
  std::vector<AppliedEvent> applied_;
  std::vector<EventLogEntry> log_;
};

// ---------------------------------------------------------------------------
// Abort guard.
// ---------------------------------------------------------------------------

struct AbortGuard {
  ProcessLimits limits;
  bool enabled = true;
};

struct GuardContinue {
  std::vector<std::string> normal_exceeded;
};

struct GuardAbort {
  std::string variable;
  double value = 0.0;
  double limit = 0.0;
  double time = 0.0;
};

using GuardResult = std::variant<GuardContinue, GuardAbort>;

/// Aborts on the first variable (in the given order) outside its shutdown
/// band. Variables without a limits entry are skipped.
GuardResult guard_check(std::span<const std::pair<std::string, double>> values, double t,
                        const AbortGuard& g);
GuardResult guard_check(const PlantModel& model, const PlantState& s, const AbortGuard& g);

}  // namespace icschaos
