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

#include "icschaos/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "icschaos/errors.hpp"

namespace icschaos {

namespace {

constexpr double kEps = 1e-9;

// Mean written as first + average offset so a constant series returns its
// value exactly.
double shifted_mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x - v.front();
  return v.front() + acc / static_cast<double>(v.size());
}

}  // namespace

void SteadyStateSpec::validate() const {
  if (metric.empty()) throw InvalidArgument("steady state needs a metric");
  if (!(window > 0.0) || !(band > 0.0) || !(hold >= window)) {
    throw InvalidArgument("steady state needs window > 0, band > 0 and hold >= window");
  }
}

void Hypothesis::validate() const {
  if (metric.empty()) throw InvalidArgument("hypothesis needs a metric");
  if (!(lo < hi)) throw InvalidArgument("hypothesis band needs lo < hi");
  if (!(horizon > 0.0)) throw InvalidArgument("hypothesis horizon must be positive");
}

std::optional<SteadyWindow> steady_at_end(std::span<const double> t, std::span<const double> v,
                                          const SteadyStateSpec& spec) {
  if (t.size() != v.size()) throw DimensionMismatch("times vs values");
  if (t.empty()) return std::nullopt;
  const std::size_t b = t.size() - 1;
  // a: latest sample that still gives a window of at least `hold`.
  std::optional<std::size_t> a;
  for (std::size_t i = b + 1; i-- > 0;) {
    if (t[i] <= t[b] - spec.hold + kEps) {
      a = i;
      break;
    }
  }
  if (!a) return std::nullopt;
  std::size_t w = b;
  while (w > 0 && t[w - 1] >= t[b] - spec.window - kEps) --w;
  const double mean = shifted_mean(v.subspan(w, b - w + 1));
  for (std::size_t i = *a; i <= b; ++i) {
    if (!(std::abs(v[i] - mean) <= spec.band)) return std::nullopt;
  }
  return SteadyWindow{t[*a], t[b], mean};
}

std::optional<SteadyWindow> detect_steady_state(std::span<const double> t,
                                                std::span<const double> v,
                                                const SteadyStateSpec& spec) {
  if (t.size() != v.size()) throw DimensionMismatch("times vs values");
  for (std::size_t n = 1; n <= t.size(); ++n) {
    if (auto w = steady_at_end(t.first(n), v.first(n), spec)) return w;
  }
  return std::nullopt;
}

namespace {

double scale(const Limits& l, bool high) {
  if (l.normal_low && l.normal_high && *l.normal_high > *l.normal_low) {
    return *l.normal_high - *l.normal_low;
  }
  const auto& normal = high ? l.normal_high : l.normal_low;
  const auto& shutdown = high ? l.shutdown_high : l.shutdown_low;
  if (normal && shutdown && *shutdown != *normal) return std::abs(*shutdown - *normal);
  if (normal && *normal != 0.0) return std::abs(*normal);
  return 1.0;
}

double normalized_excess(double v, const Limits& l) {
  double e = 0.0;
  if (l.normal_high && v > *l.normal_high) e = std::max(e, (v - *l.normal_high) / scale(l, true));
  if (l.normal_low && v < *l.normal_low) e = std::max(e, (*l.normal_low - v) / scale(l, false));
  return e;
}

bool at_shutdown(double v, const Limits& l) {
  return (l.shutdown_high && v >= *l.shutdown_high) || (l.shutdown_low && v <= *l.shutdown_low);
}

}  // namespace

BlastRadius blast_radius(const Trajectory& traj, const ProcessLimits& limits, double t_start,
                         double t_end) {
  BlastRadius out;
  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < traj.rows.size(); ++k) {
    const double t = traj.rows[k][0];
    if (t >= t_start - kEps && t <= t_end + kEps) rows.push_back(k);
  }
  std::size_t monitored = 0;
  double integral = 0.0;
  for (const auto& [name, l] : limits.all()) {
    auto c = traj.find(name);
    if (!c) continue;
    ++monitored;
    bool violated = false;
    bool was_at_shutdown = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = traj.rows[rows[i]][*c];
      const double e = normalized_excess(v, l);
      if (e > 0.0) violated = true;
      if (i + 1 < rows.size()) integral += e * (traj.rows[rows[i + 1]][0] - traj.rows[rows[i]][0]);
      const bool now = at_shutdown(v, l);
      if (now && !was_at_shutdown) ++out.shutdown_events;
      was_at_shutdown = now;
    }
    if (violated) out.violating.push_back(name);
  }
  if (monitored == 0 || rows.size() < 2) {
    out.fraction_violating = monitored ? static_cast<double>(out.violating.size()) / monitored : 0.0;
    return out;
  }
  const double span = traj.rows[rows.back()][0] - traj.rows[rows.front()][0];
  out.fraction_violating = static_cast<double>(out.violating.size()) / static_cast<double>(monitored);
  out.violation_integral = span > 0.0 ? integral / (span * static_cast<double>(monitored)) : 0.0;
  return out;
}

DireMetrics dire_metrics(std::span<const double> t, std::span<const double> v, double p_initial,
                         double band, double hold, double t_start) {
  if (t.size() != v.size()) throw DimensionMismatch("times vs values");
  DireMetrics d;
  d.p_initial = p_initial;
  d.p_min = p_initial;
  d.t_dip = t_start;
  d.p_final = p_initial;
  d.restoration_ratio = 1.0;
  std::size_t first = 0;
  while (first < t.size() && t[first] < t_start - kEps) ++first;
  if (first == t.size()) return d;
  t = t.subspan(first);
  v = v.subspan(first);

  std::size_t dip = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[dip]) dip = i;
  }
  if (v[dip] < p_initial) {
    d.p_min = v[dip];
    d.t_dip = t[dip];
  } else {
    dip = 0;
    d.t_dip = t[0];
  }
  auto in_band = [&](std::size_t i) { return std::abs(v[i] - p_initial) <= band; };
  for (std::size_t i = dip; i < v.size(); ++i) {
    if (!in_band(i)) continue;
    if (!d.t_reentry) d.t_reentry = t[i];
    if (t[i] + hold > t.back() + kEps) break;
    bool holds = true;
    for (std::size_t k = i; k < v.size() && t[k] <= t[i] + hold + kEps; ++k) {
      if (!in_band(k)) {
        holds = false;
        break;
      }
    }
    if (holds) {
      d.t_recover = t[i];
      break;
    }
  }
  std::size_t tail = v.size() - 1;
  while (tail > 0 && t[tail - 1] >= t.back() - hold - kEps) --tail;
  d.p_final = shifted_mean(v.subspan(tail));
  if (p_initial != 0.0) {
    d.restoration_ratio = std::max(0.0, d.p_final / p_initial);
  } else {
    d.restoration_ratio = d.p_final == 0.0 ? 1.0 : 0.0;
  }
  return d;
}

void ExperimentSpec::validate() const {
  steady.validate();
  hypothesis.validate();
  if (!(duration >= hypothesis.horizon)) throw InvalidArgument("duration must cover the hypothesis horizon");
  if (!(settle_limit > 0.0)) throw InvalidArgument("settle limit must be positive");
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Held: return "held";
    case VerdictKind::Disproved: return "disproved";
    case VerdictKind::Aborted: return "aborted";
    case VerdictKind::NoSteadyState: return "no_steady_state";
  }
  return "?";
}

namespace {

// Advances one step and applies the guard. Returns false when the run stops.
bool guarded_step(ClosedLoop& loop, const AbortGuard& guard, ExperimentResult& r) {
  try {
    loop.advance();
  } catch (const NonFiniteState&) {
    r.verdict.kind = VerdictKind::Aborted;
    r.verdict.reason = "integrator divergence";
    r.verdict.time = loop.time();
    return false;
  }
  const GuardResult g = guard_check(loop.plant(), loop.state(), guard);
  if (const auto* abort = std::get_if<GuardAbort>(&g)) {
    loop.record_sample();
    r.verdict.kind = VerdictKind::Aborted;
    r.verdict.reason = "shutdown limit exceeded: " + abort->variable;
    r.verdict.time = abort->time;
    r.verdict.abort = *abort;
    return false;
  }
  for (const auto& name : std::get<GuardContinue>(g).normal_exceeded) {
    if (std::find(r.normal_exceeded.begin(), r.normal_exceeded.end(), name) == r.normal_exceeded.end()) {
      r.normal_exceeded.push_back(name);
    }
  }
  return true;
}

void evaluate_hypothesis(const ExperimentSpec& spec, ExperimentResult& r) {
  const Trajectory& traj = r.trajectory;
  const std::size_t c = traj.column(spec.hypothesis.metric);
  const double t_hi = r.t_injection + spec.hypothesis.horizon;
  bool violated = false;
  for (const auto& row : traj.rows) {
    const double t = row[0];
    if (t < r.t_injection - kEps || t > t_hi + kEps) continue;
    const double v = row[c];
    const double excursion = std::max(spec.hypothesis.lo - v, v - spec.hypothesis.hi);
    if (!(excursion <= 0.0)) {
      if (!violated) {
        violated = true;
        // An abort keeps its own time and value.
        if (r.verdict.kind != VerdictKind::Aborted) {
          r.verdict.time = t;
          r.verdict.value = v;
        }
      }
      r.verdict.max_excursion = std::isnan(v) ? v : std::max(r.verdict.max_excursion, excursion);
    }
  }
  if (violated && r.verdict.kind == VerdictKind::Held) r.verdict.kind = VerdictKind::Disproved;
  if (violated && r.verdict.kind == VerdictKind::Disproved) {
    r.verdict.reason = spec.hypothesis.metric + " left [" + std::to_string(spec.hypothesis.lo) +
                       ", " + std::to_string(spec.hypothesis.hi) + "]";
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult r;
  r.seed = spec.seed;
  r.setpoints = spec.setpoints;
  r.certificate = spec.certificate;

  LoopSetup setup = spec.setup;
  const DisturbanceSignal disturbance = setup.disturbance;
  setup.disturbance = DisturbanceSignal(disturbance.dim());
  ClosedLoop loop(std::move(setup));
  const std::size_t metric = loop.trajectory().column(spec.steady.metric);
  loop.trajectory().column(spec.hypothesis.metric);

  if (const net::Network* net = loop.network()) {
    for (std::size_t i = 0; i < net->node_count(); ++i) {
      r.node_names.push_back(net->base_node(NodeId::from_slot(i)).name);
    }
  }
  auto finish = [&]() {
    if (const net::Network* net = loop.network()) r.messages = net->log();
    r.trajectory = loop.take_trajectory();
    return std::move(r);
  };

  // Settle.
  std::vector<double> ts{loop.trajectory().rows.back()[0]};
  std::vector<double> vs{loop.trajectory().rows.back()[metric]};
  while (!r.steady) {
    if (loop.time() >= spec.settle_limit - kEps) {
      r.verdict.kind = VerdictKind::NoSteadyState;
      r.verdict.reason = "no steady state within " + std::to_string(spec.settle_limit) + " min";
      return finish();
    }
    const std::size_t rows = loop.trajectory().size();
    if (!guarded_step(loop, spec.guard, r)) return finish();
    if (loop.trajectory().size() != rows) {
      ts.push_back(loop.trajectory().rows.back()[0]);
      vs.push_back(loop.trajectory().rows.back()[metric]);
      r.steady = steady_at_end(ts, vs, spec.steady);
    }
  }

  // Inject and observe.
  r.t_injection = loop.time();
  loop.set_disturbance(disturbance.shifted(r.t_injection));
  ChaosDriver driver(spec.schedule, r.t_injection);
  const double t_end = r.t_injection + spec.duration;
  bool stopped = false;
  while (loop.time() < t_end - kEps) {
    driver.before_step(loop);
    if (!guarded_step(loop, spec.guard, r)) {
      stopped = true;
      break;
    }
  }
  if (!stopped) loop.record_sample();
  r.events = driver.log();

  const double t_last = loop.time();
  if (const net::Network* net = loop.network()) r.messages = net->log();
  r.trajectory = loop.take_trajectory();
  evaluate_hypothesis(spec, r);
  r.blast = blast_radius(r.trajectory, spec.guard.limits, r.t_injection, t_last);
  const auto t = r.trajectory.times();
  const auto v = r.trajectory.series(spec.steady.metric);
  r.dire = dire_metrics(t, v, r.steady->baseline, spec.steady.band, spec.steady.hold, r.t_injection);
  return r;
}

std::vector<BatchOutcome> batch_run(std::span<const ExperimentSpec> specs, unsigned parallelism) {
  std::vector<BatchOutcome> out(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        out[i].result = run_experiment(specs[i]);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(specs.size())));
  if (n <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace icschaos
